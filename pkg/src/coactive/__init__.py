"""Co-active preference learning for robot trajectory ranking."""

__version__ = "0.1.0"
