"""File formats and file adapters."""
