#!/usr/bin/env python3
"""Benchmark the two MD5 kernels (compiled extension vs pure Python),
with hashlib as a point of reference, on the payload sizes the suite
actually digests: short answer-key strings and whole bank files.

    python benchmarks/bench_md5.py
"""

import hashlib
import time

from quizwright import digest
from quizwright.digest import _md5py

SIZES = [(24, 50_000), (256, 20_000), (4096, 2_000), (65536, 200)]


def kernels():
    out = [("pure", _md5py.md5_bytes)]
    try:
        from quizwright.digest import _md5core
        out.append(("compiled", _md5core.md5_bytes))
    except ImportError:
        print("note: compiled kernel not built, benchmarking pure only")
    out.append(("hashlib", lambda m: hashlib.md5(m).digest()))
    return out


def bench(fn, message, rounds):
    fn(message)  # warm up
    started = time.perf_counter()
    for _ in range(rounds):
        fn(message)
    elapsed = time.perf_counter() - started
    return rounds * len(message) / elapsed / 1e6, rounds / elapsed


def main():
    print(f"active backend: {digest.BACKEND}")
    names = [name for name, _ in kernels()]
    print(f"{'size':>8}  " + "".join(f"{name:>22}" for name in names))
    for size, rounds in SIZES:
        message = bytes(i & 0xFF for i in range(size))
        cells = []
        for _, fn in kernels():
            mb_s, calls_s = bench(fn, message, rounds)
            cells.append(f"{mb_s:9.1f} MB/s{calls_s:9.0f}/s"[:22].rjust(22))
        print(f"{size:>8}  " + "".join(cells))


if __name__ == "__main__":
    main()
