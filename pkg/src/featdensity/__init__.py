"""Feature Density toolkit: preprocessing combinations, FD tables, a small
classifier harness, FD/F1 correlation analysis and FD-guided experiment pruning."""

__version__ = "0.1.0"
