"""Infrastructure layer - External adapters."""
