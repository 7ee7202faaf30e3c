"""Select the compiled core when available.

Set ``HYPADAMS_PURE=1`` to force the NumPy fallback.
"""
from __future__ import annotations

import os

from . import _core_py

NAME = "python"
_impl = _core_py

if os.environ.get("HYPADAMS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]
        _impl = _compiled
        NAME = "cython"
    except ImportError:
        pass

inner_rule = _core_py.inner_rule
abel_order = _core_py.abel_order
abel_nodes = _core_py.abel_nodes
bipolar_nodes = _impl.bipolar_nodes
spherical_table = _impl.spherical_table
oneil_bruteforce = _impl.oneil_bruteforce


def implementation(name: str):
    """Return the module implementing ``name`` ('python' or 'cython')."""
    if name == "python":
        return _core_py
    if name == "cython":
        from . import _core  # type: ignore[attr-defined]
        return _core
    raise ValueError(name)
