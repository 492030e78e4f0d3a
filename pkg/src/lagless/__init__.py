"""Dependency upgrade planning that lowers technical lag without introducing
breaking changes or redundant dependencies."""

from __future__ import annotations

__version__ = "0.1.0"
