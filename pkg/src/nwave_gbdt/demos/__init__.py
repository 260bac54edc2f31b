"""Bundled demo configurations (JSON)."""
