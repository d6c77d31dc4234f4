"""Logging, errors, storage and format versioning."""
