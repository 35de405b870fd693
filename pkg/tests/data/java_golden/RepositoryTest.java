package org.example.repo;

import org.junit.Test;
import static org.junit.Assert.*;

/**
 * Tests for the repository. Uses an in-memory store; see {@link Repository}.
 */
public class RepositoryTest {
    @Test
    @SuppressWarnings("unchecked")
    public void findsById() {
        Repository<String> repo = new Repository<>();
        repo.save("1", "one");
        assertEquals("one", repo.find("1").get());
    }
}
