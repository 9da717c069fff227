"""Workbench for the BSEA-2 backdoored stream cipher: the cipher itself,
Walsh-spectral analysis of the key-dependent combiner, K' class
partitioning, and the ciphertext-only divide-and-conquer attack."""

__version__ = "0.1.0"

from .cipher import DEFAULT_SPEC, MINI_SPEC, InstanceSpec, SecretKey  # noqa: F401
