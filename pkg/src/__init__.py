"""probeplan - multi-query probe-order optimizer and stream-join simulator."""
