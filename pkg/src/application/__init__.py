"""Application layer - Use cases and port definitions."""
