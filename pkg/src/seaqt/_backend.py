"""Select the compiled kernels when available, the numpy fallback otherwise.

Set ``SEAQT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("SEAQT_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

_active = _compiled if _compiled is not None else _fallback


def active_backend() -> str:
    return "cython" if _active is _compiled and _compiled is not None else "python"


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; choose from {sorted(BACKENDS)}")
    _active = BACKENDS[name]


def project_dissipator(p, target, ops, tau, tol=1e-12):
    return _active.project_dissipator(p, target, ops, tau, tol)


def hamiltonian_eig(p, h):
    return _active.hamiltonian_eig(p, h)
