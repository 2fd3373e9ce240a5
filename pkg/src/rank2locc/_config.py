"""Shared numerical tolerance.

Every ``tol=None`` argument in the package falls back to :data:`settings.tol`.
The CLI ``--tolerance`` flag rewrites it once at startup.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass
class _Settings:
    tol: float = 1e-9


settings = _Settings()


def resolve(tol: float | None) -> float:
    return settings.tol if tol is None else tol
