"""4-input Boolean functions as 16-bit truth tables and their Walsh spectra.

Truth table convention: f(x) = bit x of the word, bit 0 least significant,
so 0x93A0 expands to (0,0,0,0,0,1,0,1,1,1,0,0,1,0,0,1). The combiner input
index packs register outputs as x3 + (x2<<1) + (x1<<2) + (x0<<3): mask bit
3 addresses R0, bit 2 R1, bit 1 R2, bit 0 R3.

Spectra are exact signed integers; Parseval and table-matching tests rely
on exactness, so nothing here goes through floats.
"""
import numpy as np

from . import kernels

#: index bit carrying register R0's output (per the combiner index packing)
R0_INDEX_BIT = 3

#: truth-table pattern of the linear function x0 (bit 3 of the input index)
X0_PATTERN = 0xFF00


def table_size(n: int) -> int:
    return 1 << n


def apply_key_mask(f0: int, kprime: int) -> int:
    """Key-setup table modification: f0 XOR ((kprime << 8) | kprime)."""
    if not 0 <= kprime <= 0xFF:
        raise ValueError("kprime must be an 8-bit value")
    return f0 ^ (((kprime << 8) | kprime) & 0xFFFF)


def walsh_transform(word: int, n: int = 4) -> tuple:
    """Spectrum (chi(0), ..., chi(2^n - 1)); chi(u) = sum (-1)^(f(x)^<x,u>)."""
    if n > 16:
        raise ValueError("n must be at most 16")
    size = table_size(n)
    nbytes = (size + 7) // 8
    table = np.unpackbits(
        np.frombuffer(word.to_bytes(nbytes, "little"), dtype=np.uint8),
        bitorder="little")[:size]
    a = 1 - 2 * table.astype(np.int32)
    kernels.fwht_inplace(a)
    return tuple(int(v) for v in a)


def correlation_probability(spectrum, u: int) -> float:
    """P[f(x) = <x,u>] = (1 + chi(u)/2^n) / 2."""
    size = len(spectrum)
    return 0.5 * (1.0 + spectrum[u] / size)


def effective_spectrum(word: int) -> tuple:
    """Spectrum of g = f XOR x0, the combiner the attacker actually sees.

    Since x0 sits at index bit 3, chi_g(u) = chi_f(u ^ 0b1000).
    """
    base = walsh_transform(word, 4)
    return tuple(base[u ^ (1 << R0_INDEX_BIT)] for u in range(16))


def is_bent(word: int, n: int = 4) -> bool:
    """True iff every spectrum value has absolute value 2^(n/2)."""
    if n % 2:
        raise ValueError("bent functions need an even number of inputs")
    target = 1 << (n // 2)
    return all(abs(v) == target for v in walsh_transform(word, n))
