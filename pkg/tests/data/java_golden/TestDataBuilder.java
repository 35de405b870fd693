package org.example.build;

public class TestDataBuilder {
    private int size;

    public TestDataBuilder withSize(int size) {
        this.size = size;
        return this;
    }

    public int[] build() { return new int[size]; }
}
