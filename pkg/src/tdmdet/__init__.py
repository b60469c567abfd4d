"""Top-down modulated feature hierarchies for two-stage object detection."""

__version__ = "0.1.0"
