#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python/NumPy fallback.

Run:  python benchmarks/bench_kernels.py [--quick]

Covers the two hot loops (LFSR sequence generation, in-place integer
Walsh-Hadamard transform) plus the end-to-end stage scoring they feed.
"""
import argparse
import time

import numpy as np

from bsea2 import kernels
from bsea2.attack import CiphertextSample, score_stage
from bsea2.cipher import InstanceSpec, DEFAULT_SPEC, random_key, split_key
from bsea2.classifier import plan_attack
from bsea2.plaintext import KNOWN_KEYSTREAM_MODEL
from bsea2.lfsr import P3


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lfsr(n):
    fill = (1 << 36) | 0x5A5A5
    rows = []
    t = timeit(lambda: kernels._lfsr_sequence_py(P3.tapmask, 37, fill, n))
    rows.append(("lfsr_sequence (pure python)", t, n / t / 1e6))
    if kernels.HAVE_CORE:
        t = timeit(lambda: kernels._lfsr_sequence_core(P3.tapmask, 37, fill, n))
        rows.append(("lfsr_sequence (cython)", t, n / t / 1e6))
    return rows


def bench_fwht(m):
    rng = np.random.default_rng(1)
    base = rng.integers(-100, 100, 1 << m).astype(np.int32)
    rows = []
    n = base.size

    def run_numpy():
        a = base.copy()
        kernels._fwht_numpy(a)

    t = timeit(run_numpy)
    rows.append((f"fwht 2^{m} (numpy)", t, n * m / t / 1e6))
    if kernels.HAVE_CORE:
        import bsea2._core as core

        def run_core():
            a = base.copy()
            core.fwht_i32(a)

        t = timeit(run_core)
        rows.append((f"fwht 2^{m} (cython)", t, n * m / t / 1e6))
    return rows


def bench_stage():
    """Full R0 stage: 2^23 candidates scored from 6000 keystream bits."""
    spec = InstanceSpec("bench", DEFAULT_SPEC.polynomials, 0x953F)
    kprime = 0xBD
    rng = np.random.default_rng(2)
    key = random_key(spec, rng, kprime=kprime)
    from bsea2.cipher import encrypt, key_setup
    c = encrypt(key_setup(spec, key), np.zeros(6000, np.uint8))
    sample = CiphertextSample(bits=c, model=KNOWN_KEYSTREAM_MODEL, spec=spec)
    plan = plan_attack(spec, kprime)
    stage = next(st for st in plan.stages if st.targets == frozenset({0}))
    fills, _ = split_key(spec, key)
    known = {r: fills[r] for r in stage.known}

    t = timeit(lambda: score_stage(sample, stage, known, kprime), repeats=2)
    states = (1 << stage.exponent)
    return [("score_stage 2^23 x 6000 bits", t, states / t / 1e6)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    print(f"compiled core available: {kernels.HAVE_CORE}")
    print(f"{'benchmark':<34} {'seconds':>9}  {'Mops/s':>9}")
    n = 200_000 if args.quick else 2_000_000
    m = 18 if args.quick else 22
    for name, secs, mops in bench_lfsr(n) + bench_fwht(m) + bench_stage():
        print(f"{name:<34} {secs:>9.4f}  {mops:>9.1f}")
    if not kernels.HAVE_CORE:
        print("note: run again without BSEA2_NO_CORE (and with the extension "
              "built) to compare the compiled path")


if __name__ == "__main__":
    main()
