package org.example.version;

public final class Latest {
    public static String version() { return "1.0"; }
}
