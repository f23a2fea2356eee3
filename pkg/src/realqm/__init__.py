"""Real versus complex quantum theory in network Bell tests: a numerical laboratory."""

__version__ = "0.1.0"
