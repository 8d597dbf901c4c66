"""UI package for CLI interface."""

from .cli import CLI

__all__ = ["CLI"]
