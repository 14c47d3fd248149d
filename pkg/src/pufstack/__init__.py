"""Desk-scale simulator for PUF-backed security services."""

__version__ = "0.1.0"

from . import config, errors, harness, keys, metrics, protocols, puf, xof  # noqa: F401
