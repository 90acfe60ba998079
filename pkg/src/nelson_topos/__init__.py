"""Finite presheaf toposes, internal ultrafilters and ultrapower Nelson structures."""

from __future__ import annotations

__version__ = "0.1.0"
