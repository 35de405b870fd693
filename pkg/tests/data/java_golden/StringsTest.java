package org.example.str;

public class StringsTest {
    private static final String DOC = "@Test public void testInString() { }";
    public String describe() { return DOC; }
}
