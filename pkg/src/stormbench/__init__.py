"""stormbench: software-defined RF interference bench over a simulated channel."""

__version__ = "0.1.0"
