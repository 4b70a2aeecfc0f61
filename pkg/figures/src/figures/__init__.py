"""Paper-style figures from rewire-ipd aggregate CSVs."""

__version__ = "0.1.0"
