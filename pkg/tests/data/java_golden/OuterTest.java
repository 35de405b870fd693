package org.example.nested;

import org.junit.Test;

public class OuterTest {
    static class Helper {
        int twice(int x) { return 2 * x; }
    }

    public static class Inner {
        @Test
        public void innerCase() {
            new Helper().twice(2);
        }
    }
}
