"""Jointly optimal communication and control for two agents with costly state sharing."""
from __future__ import annotations

__version__ = "0.1.0"
