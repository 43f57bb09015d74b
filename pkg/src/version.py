"""Application version. Single source of truth for versioning."""

__version__ = "0.1.0"
