package org.example.enums;

import org.junit.Test;

public class EnumHandlingTest {
    enum Color { RED, GREEN; public String lower() { return name().toLowerCase(); } }

    @Test
    public void lowers() {
        Color.RED.lower();
    }
}
