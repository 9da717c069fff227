# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the two hot loops: LFSR sequence generation and the
in-place integer Walsh-Hadamard butterfly. Selected at import by
bsea2.kernels when available; bit-exact with the fallback implementations."""


def lfsr_sequence_into(unsigned char[::1] out,
                       unsigned long long tapmask,
                       int degree,
                       unsigned long long fill):
    """Fill ``out`` with successive output bits (stage s0 before each shift).

    Returns the register state after len(out) clocks.
    """
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t t
    cdef unsigned long long state = fill
    cdef unsigned long long fb
    cdef int shift = degree - 1
    with nogil:
        for t in range(n):
            out[t] = <unsigned char> (state & 1)
            fb = state & tapmask
            fb ^= fb >> 32
            fb ^= fb >> 16
            fb ^= fb >> 8
            fb ^= fb >> 4
            fb ^= fb >> 2
            fb ^= fb >> 1
            state = (state >> 1) | ((fb & 1) << shift)
    return state


def fwht_i32(int[::1] a):
    """Unnormalized Walsh-Hadamard transform in place; length must be 2^m."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t h = 1
    cdef Py_ssize_t i, j
    cdef int x, y
    with nogil:
        while h < n:
            i = 0
            while i < n:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2
