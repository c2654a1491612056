"""Test suite for probeplan."""
