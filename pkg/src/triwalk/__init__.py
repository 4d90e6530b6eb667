"""Three-state discrete-time quantum walks on the oriented triangular lattice."""

__version__ = "0.1.0"
