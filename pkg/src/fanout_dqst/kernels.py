"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``FANOUT_DQST_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("FANOUT_DQST_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def get_backend(name: str):
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def propagate_frames(targets, meter_bit, shots, ev_shot, ev_slot, ev_x, ev_z, backend=None):
    """Sort events by (shot, slot) and run the frame kernel."""
    impl = _impl if backend is None else get_backend(backend)
    ev_shot = np.asarray(ev_shot, dtype=np.int64)
    ev_slot = np.asarray(ev_slot, dtype=np.int64)
    order = np.lexsort((ev_slot, ev_shot))
    return impl.propagate_frames(
        np.ascontiguousarray(targets, dtype=np.int64),
        int(meter_bit),
        int(shots),
        np.ascontiguousarray(ev_shot[order]),
        np.ascontiguousarray(ev_slot[order]),
        np.ascontiguousarray(np.asarray(ev_x, dtype=np.uint64)[order]),
        np.ascontiguousarray(np.asarray(ev_z, dtype=np.uint64)[order]),
    )


def pair_depolarize(rho, bit_a, bit_b, p, backend=None):
    impl = _impl if backend is None else get_backend(backend)
    if p == 0:
        return np.array(rho, dtype=complex)
    return impl.pair_depolarize(np.ascontiguousarray(rho, dtype=np.complex128), int(bit_a), int(bit_b), float(p))
