package org.example.game;

public class Contest {
    private final String name;

    public Contest(String name) {
        this.name = name;
    }

    public String winner() {
        return name;
    }
}
