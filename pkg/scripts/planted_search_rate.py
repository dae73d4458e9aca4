"""Recovery rate of the anticlique search on planted instances.

A rank-k anticlique is planted by supporting the generators on the first
``d - support`` coordinates and conjugating by a random unitary.
"""
import argparse
import time
import warnings

import numpy as np

from ncg.matcore import adjoint, random_unitary
from ncg.opsys import normalize
from ncg.ramsey import SearchConfig, find_anticlique, is_quantum_anticlique


def planted(d, free, n_gens, dense, rng):
    gens = []
    for _ in range(n_gens):
        a = np.zeros((d, d), dtype=complex)
        b = d - free
        if dense:
            z = rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
            a[:b, :b] = z + adjoint(z)
        else:
            a[:b, :b] = np.diag(rng.standard_normal(b))
        gens.append(a)
    u = random_unitary(d, rng)
    return normalize([u @ a @ adjoint(u) for a in gens], d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--free", type=int, default=8, help="dimension of the planted null block")
    ap.add_argument("--gens", type=int, default=3)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--restarts", type=int, default=8)
    ap.add_argument("--dense", action="store_true", help="Hermitian blocks instead of diagonals")
    args = ap.parse_args()
    strategies = {}
    hits = 0
    t0 = time.perf_counter()
    for seed in range(args.runs):
        rng = np.random.default_rng(1000 + seed)
        v = planted(args.d, args.free, args.gens, args.dense, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = find_anticlique(v, args.k, SearchConfig(seed=seed, restarts=args.restarts))
        if res and is_quantum_anticlique(v, res.projection):
            hits += 1
            strategies[res.strategy] = strategies.get(res.strategy, 0) + 1
    elapsed = time.perf_counter() - t0
    print(f"recovered {hits}/{args.runs} in {elapsed:.1f}s; by strategy: {strategies}")


if __name__ == "__main__":
    main()
