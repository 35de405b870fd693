package org.example;

import org.junit.Test;

public class Main {
    @Test
    public void notInATestFile() { }

    public void testNameButWrongFile() { }

    public static void main(String[] args) { }
}
