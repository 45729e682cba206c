"""Backend selection for the stencil kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. :func:`set_backend` switches explicitly (used by the benchmark
and the cross-backend tests).
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = _BACKENDS.get("cython", _kernels_py)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def set_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


def get_backend(name: str | None = None):
    return _active if name is None else _BACKENDS[name]


def shift_generator(rho, sigma2, nu_u2, nu_d2, periodic):
    return _active.shift_generator(rho, sigma2, nu_u2, nu_d2, periodic)


def euler_steps(rho, n_steps, dt, sigma2, nu_u2, nu_d2, periodic):
    return _active.euler_steps(rho, n_steps, dt, sigma2, nu_u2, nu_d2, periodic)
