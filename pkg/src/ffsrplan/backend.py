"""Rollout backend selection: compiled extension if present, numpy otherwise.

Set ``FFSRPLAN_BACKEND=python`` or ``FFSRPLAN_BACKEND=compiled`` to force a
choice (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _rollout_py

try:
    from . import _rollout_cy
except ImportError:  # pure-Python install
    _rollout_cy = None

_BACKENDS = {"python": _rollout_py}
if _rollout_cy is not None:
    _BACKENDS["compiled"] = _rollout_cy


def default_backend() -> str:
    forced = os.environ.get("FFSRPLAN_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise RuntimeError(
                f"FFSRPLAN_BACKEND={forced!r} is not available; "
                f"choices: {sorted(_BACKENDS)}"
            )
        return forced
    return "compiled" if "compiled" in _BACKENDS else "python"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str | None = None):
    """Return the rollout module for ``name`` (default: best available)."""
    if name is None:
        name = default_backend()
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        )
    return _BACKENDS[name]
