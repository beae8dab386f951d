"""Cell-switching simulator for HAPS-assisted heterogeneous networks."""

__version__ = "0.1.0"
