"""Mission planning for autonomous UAV power-line inspection."""

__version__ = "0.1.0"
