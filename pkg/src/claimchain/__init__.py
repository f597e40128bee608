"""Per-user, privacy-preserving repositories of key-binding claims."""

__version__ = "0.1.0"
