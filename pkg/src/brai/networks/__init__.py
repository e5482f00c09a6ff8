"""Bundled ground-truth networks in the plain-text network format."""
