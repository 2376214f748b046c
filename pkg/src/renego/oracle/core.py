"""Kernel selection: compiled tree walker when available, pure fallback otherwise."""
from __future__ import annotations

from . import _walk_py

try:
    from . import _treecore  # compiled extension, built by setup.py

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build environment
    _treecore = None
    HAVE_COMPILED = False

_active = _treecore if HAVE_COMPILED else _walk_py


def kernel_name() -> str:
    return "compiled" if HAVE_COMPILED else "pure-python"


def theorem_walk(tables, p1, p2a, p2b, node_cap):
    return _active.theorem_walk(tables, p1, p2a, p2b, node_cap)


def br_walk(tables, p2_model, p2_true, node_cap, eps=None):
    return _active.br_walk(tables, p2_model, p2_true, node_cap, eps)


def use_pure():
    """Force the pure walker (benchmarks and parity tests)."""
    return _walk_py
