"""Kernel selection: compiled extension when importable, else pure Python.

Set ``AUXSEM_PURE_PYTHON=1`` to force the fallback.  The compiled kernels
handle graphs of up to 64 nodes; larger graphs always use the fallback.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("AUXSEM_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_MAX_COMPILED = 64


def _pick(n):
    return _compiled if (_compiled is not None and n <= _MAX_COMPILED) else _kernels_py


def dconnected_set(pa, ch, sib, source, given, an_given):
    return _pick(len(pa)).dconnected_set(pa, ch, sib, source, given, an_given)


def path_system_flow(pa, ch, sib, n, sources, targets, half_trek, banned):
    return _pick(n).path_system_flow(pa, ch, sib, n, list(sources), list(targets),
                                     half_trek, list(banned))
