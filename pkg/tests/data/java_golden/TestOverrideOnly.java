package org.example.ovr;

public class TestOverrideOnly implements Runnable {
    @Override
    public void run() { }

    @SuppressWarnings("unused")
    public void prepare() { }
}
