"""Infrastructure layer integration tests."""
