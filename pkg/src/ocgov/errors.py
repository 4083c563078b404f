"""Shared error base for the ocgov package.

Every module defines its own failure types; they all derive from
``OcgovError`` so the CLI and the HTTP layer can map any domain failure to
an exit code / machine-readable error code without enumerating modules.
"""

from __future__ import annotations


class OcgovError(Exception):
    """Base class for all domain errors raised by ocgov."""

    @property
    def code(self) -> str:
        """Machine-readable error code (the concrete class name)."""
        return type(self).__name__
