"""BSEA-2 key setup, keystream generation and encryption.

Everything is generic over an InstanceSpec so the reduced-size instance used
for end-to-end attack tests shares this code path with the production cipher.

Key-bit convention (the algorithm itself does not fix one): key bits are
numbered 0..(keybits-1) starting from the most significant hex digit of the
key file. Bits fill R0 stages s_0.. first, then R1, R2, R3, and the final
8 bits are K' (first of them = K' MSB).
"""
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import boolfn, kernels
from .errors import DegenerateKey, WrongKeyLength
from .lfsr import (LfsrState, P0, P1, P2, P3, make_polynomial,
                   polynomial_from_list)


@dataclass(frozen=True)
class InstanceSpec:
    """Four feedback polynomials plus the initial combiner truth table."""

    name: str
    polynomials: tuple
    f0: int

    def __post_init__(self):
        degrees = [p.degree for p in self.polynomials]
        if len(self.polynomials) != 4:
            raise ValueError("an instance uses exactly four registers")
        if len(set(degrees)) != 4:
            raise ValueError("polynomial degrees must be pairwise distinct")
        if not 0 <= self.f0 <= 0xFFFF:
            raise ValueError("f0 must be a 16-bit truth table")

    @property
    def degrees(self) -> tuple:
        return tuple(p.degree for p in self.polynomials)

    @property
    def key_bits(self) -> int:
        return sum(self.degrees) + 8

    def register_offsets(self) -> tuple:
        offs = []
        pos = 0
        for d in self.degrees:
            offs.append(pos)
            pos += d
        return tuple(offs)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "polynomials": [p.to_list() for p in self.polynomials],
            "f0": f"0x{self.f0:04X}",
        }

    def fingerprint(self) -> str:
        """Stable digest of the cipher structure, carried by every report."""
        payload = json.dumps(
            {"polynomials": [p.to_list() for p in self.polynomials],
             "f0": self.f0}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


DEFAULT_SPEC = InstanceSpec("default", (P0, P1, P2, P3), 0x93A0)

# Reduced instance for CI-scale end-to-end attacks; primitive polynomials
# of pairwise co-prime prime degrees, verified by check_period in the tests.
MINI_SPEC = InstanceSpec(
    "mini",
    (make_polynomial([1, 0], 7),
     make_polynomial([4, 0], 9),
     make_polynomial([2, 0], 11),
     make_polynomial([4, 3, 1, 0], 13)),
    0x93A0,
)

_NAMED_SPECS = {"default": DEFAULT_SPEC, "mini": MINI_SPEC}


def spec_from_json_dict(data: dict) -> InstanceSpec:
    polys = tuple(polynomial_from_list(v) for v in data["polynomials"])
    f0 = data["f0"]
    if isinstance(f0, str):
        f0 = int(f0, 16)
    return InstanceSpec(data.get("name", "custom"), polys, f0)


def load_spec(selector: str) -> InstanceSpec:
    """Resolve 'default', 'mini' or a path to a spec JSON file."""
    if selector in _NAMED_SPECS:
        return _NAMED_SPECS[selector]
    with open(selector) as fh:
        return spec_from_json_dict(json.load(fh))


@dataclass(frozen=True)
class SecretKey:
    """A key is just its bit string; views into it depend on the spec."""

    value: int
    nbits: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.nbits):
            raise ValueError("key value wider than its declared bit length")

    def bit(self, i: int) -> int:
        """Key bit i, numbered from the most significant end."""
        return (self.value >> (self.nbits - 1 - i)) & 1

    def to_hex(self) -> str:
        return f"{self.value:0{self.nbits // 4}X}"

    @classmethod
    def from_hex(cls, text: str, nbits: int) -> "SecretKey":
        text = text.strip()
        if len(text) * 4 != nbits:
            raise WrongKeyLength(
                f"expected {nbits // 4} hex characters, got {len(text)}")
        return cls(int(text, 16), nbits)


def split_key(spec: InstanceSpec, key: SecretKey):
    """(register fills, kprime) per the documented key-bit layout."""
    if key.nbits != spec.key_bits:
        raise WrongKeyLength(
            f"spec '{spec.name}' needs {spec.key_bits} key bits, "
            f"got {key.nbits}")
    fills = []
    for off, deg in zip(spec.register_offsets(), spec.degrees):
        fills.append(sum(key.bit(off + i) << i for i in range(deg)))
    kprime = key.value & 0xFF
    return tuple(fills), kprime


def assemble_key(spec: InstanceSpec, fills, kprime: int) -> SecretKey:
    """Inverse of split_key."""
    value = 0
    nbits = spec.key_bits
    for off, deg, fill in zip(spec.register_offsets(), spec.degrees, fills):
        for i in range(deg):
            value |= ((fill >> i) & 1) << (nbits - 1 - (off + i))
    value |= kprime & 0xFF
    return SecretKey(value, nbits)


def random_key(spec: InstanceSpec, rng, kprime: int | None = None) -> SecretKey:
    """Uniform key with non-zero register fills (resampled if degenerate)."""
    fills = []
    for deg in spec.degrees:
        fill = 0
        while fill == 0:
            fill = int(rng.integers(0, 1 << deg))
        fills.append(fill)
    if kprime is None:
        kprime = int(rng.integers(0, 256))
    return assemble_key(spec, fills, kprime)


class CipherInstance:
    """A keyed cipher with a mutable stream position.

    Not shareable across threads mid-stream; create one per stream.
    """

    def __init__(self, spec: InstanceSpec, states, f: int):
        self.spec = spec
        self.states = list(states)
        self.f = f

    def keystream(self, n: int) -> np.ndarray:
        return keystream(self, n)


def key_setup(spec: InstanceSpec, key: SecretKey) -> CipherInstance:
    """Load register fills from the key and mask the combiner table with K'."""
    fills, kprime = split_key(spec, key)
    for j, fill in enumerate(fills):
        if fill == 0:
            raise DegenerateKey(f"register R{j} fill is all-zero")
    states = [LfsrState(p, fill)
              for p, fill in zip(spec.polynomials, fills)]
    return CipherInstance(spec, states, boolfn.apply_key_mask(spec.f0, kprime))


def combine_outputs(f: int, x0, x1, x2, x3) -> np.ndarray:
    """sigma = f(x3 + (x2<<1) + (x1<<2) + (x0<<3)) XOR x0, vectorized."""
    idx = (x3 | (x2 << 1) | (x1 << 2) | (x0 << 3)).astype(np.uint8)
    f_table = np.array([(f >> i) & 1 for i in range(16)], dtype=np.uint8)
    return f_table[idx] ^ x0


def keystream(instance: CipherInstance, n: int) -> np.ndarray:
    """Next n keystream bits; advances the instance's stream position."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    seqs = []
    new_states = []
    for st in instance.states:
        spec = st.spec
        seq, final = kernels.lfsr_sequence(spec.tapmask, spec.degree,
                                           st.fill, n)
        seqs.append(seq)
        new_states.append(LfsrState(spec, final))
    instance.states = new_states
    return combine_outputs(instance.f, *seqs)


def encrypt(instance: CipherInstance, plaintext_bits: np.ndarray) -> np.ndarray:
    """c = p XOR keystream; decryption is the same operation."""
    bits = np.asarray(plaintext_bits, dtype=np.uint8)
    if bits.size == 0:
        return bits.copy()
    return bits ^ keystream(instance, bits.size)


decrypt = encrypt
