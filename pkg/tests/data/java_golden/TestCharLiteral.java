package org.example.chars;

public class TestCharLiteral {
    private static final char OPEN = '{';
    private static final char AT = '@';
    private static final String S = "public void testFake() {";

    public char open() { return OPEN; }
}
