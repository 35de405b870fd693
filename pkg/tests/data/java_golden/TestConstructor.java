package org.example.ctor;

public class TestConstructor {
    public TestConstructor() { }
    public TestConstructor(int x) { }
}
