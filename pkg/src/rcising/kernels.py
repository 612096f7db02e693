"""Kernel backend selection.

The compiled module is used when it imports; otherwise the pure-Python
reference is used. Both consume random numbers in the same order, so a run
gives the same output on either backend.
"""
from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_active: ModuleType = _ckernels if _ckernels is not None else _pykernels


def backend() -> ModuleType:
    return _active


def backend_name() -> str:
    return _active.BACKEND


def use_backend(name: str) -> None:
    """Switch the process-wide backend (``"cython"`` or ``"python"``)."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    _active = BACKENDS[name]


def make_stream(bit_generator):
    return _active.Stream(bit_generator)


def worm_advance(*args):
    return _active.worm_advance(*args)


def or_bernoulli(*args):
    return _active.or_bernoulli(*args)


def label_clusters(*args):
    return _active.label_clusters(*args)


def sw_sweep(*args):
    return _active.sw_sweep(*args)


def lipschitz_ok(*args):
    return _active.lipschitz_ok(*args)
