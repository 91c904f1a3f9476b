"""Packet-based dual-rate PID control over a lossy, delaying network."""

__version__ = "0.1.0"
