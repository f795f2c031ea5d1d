"""Weighted persistence diagrams of metric measure spaces."""
from __future__ import annotations

__version__ = "0.1.0"
