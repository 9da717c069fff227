"""Hot-loop kernels with two interchangeable implementations.

The compiled Cython module (bsea2._core) is used when importable; otherwise
a NumPy/pure-Python fallback runs the same algorithms bit-for-bit. Setting
the environment variable BSEA2_NO_CORE=1 forces the fallback (used by the
benchmark and the equivalence tests). Correctness of both paths is defined
by the scalar clock oracle in the test suite, never by each other.
"""
import os

import numpy as np

try:
    if os.environ.get("BSEA2_NO_CORE"):
        raise ImportError("fallback forced via BSEA2_NO_CORE")
    from . import _core
except ImportError:
    _core = None

HAVE_CORE = _core is not None


def _lfsr_sequence_py(tapmask: int, degree: int, fill: int, n: int):
    out = bytearray(n)
    state = fill
    shift = degree - 1
    for t in range(n):
        out[t] = state & 1
        state = (state >> 1) | (((state & tapmask).bit_count() & 1) << shift)
    return np.frombuffer(bytes(out), dtype=np.uint8), state


def _lfsr_sequence_core(tapmask: int, degree: int, fill: int, n: int):
    out = np.empty(n, dtype=np.uint8)
    state = _core.lfsr_sequence_into(out, tapmask, degree, fill)
    return out, int(state)


def lfsr_sequence(tapmask: int, degree: int, fill: int, n: int):
    """First n output bits of the register plus the state after n clocks."""
    if HAVE_CORE:
        return _lfsr_sequence_core(tapmask, degree, fill, n)
    return _lfsr_sequence_py(tapmask, degree, fill, n)


def _fwht_numpy(a: np.ndarray) -> None:
    n = a.size
    h = 1
    while h < n:
        b = a.reshape(-1, 2, h)
        top = b[:, 0, :] + b[:, 1, :]
        bot = b[:, 0, :] - b[:, 1, :]
        b[:, 0, :] = top
        b[:, 1, :] = bot
        h *= 2


def fwht_inplace(a: np.ndarray) -> None:
    """Unnormalized Walsh-Hadamard transform of an int32 array, in place.

    a[u] becomes sum_x a[x] * (-1)^<x,u>; length must be a power of two.
    """
    if a.dtype != np.int32 or a.ndim != 1:
        raise ValueError("fwht_inplace expects a 1-D int32 array")
    if a.size & (a.size - 1):
        raise ValueError("length must be a power of two")
    if HAVE_CORE:
        _core.fwht_i32(a)
    else:
        _fwht_numpy(a)


def parity_u64(v: np.ndarray) -> np.ndarray:
    """Elementwise GF(2) parity of uint64 values, as uint8."""
    v = v.copy()
    for s in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(s)
    return (v & np.uint64(1)).astype(np.uint8)
