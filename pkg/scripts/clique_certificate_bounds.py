"""Achieved certificate bounds against K_max for random triangular diagonal families.

Each row lists the worst achieved ||E_rs - sum_j gamma_j V^* A_j V|| per level
and the a-priori estimate, so the decay as K_max grows can be read off.
"""
import argparse
import csv
import sys

import numpy as np

from ncg.constructions import ScaleLimitError, clique_certificate, triangularize_diagonals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = csv.writer(sys.stdout)
    out.writerow(["m", "trial", "k_max", "level", "achieved_max", "a_priori_max", "target"])
    for m in args.m:
        for trial in range(args.trials):
            rng = np.random.default_rng(args.seed + 1000 * m + trial)
            top = 4 * m * m
            fam = triangularize_diagonals([np.diag(rng.standard_normal(2 * top)) for _ in range(top)])
            for k_max in range(m * m, top + 1):
                try:
                    cert = clique_certificate(fam, m, k_max)
                except ScaleLimitError as exc:
                    print(f"# m={m} trial={trial} k_max={k_max}: {exc}", file=sys.stderr)
                    break
                for mu in range(1, m + 1):
                    prior = max(p for (lv, _, _), p in cert.a_priori.items() if lv == mu)
                    out.writerow([m, trial, k_max, mu, f"{cert.level_max(mu):.3e}", f"{prior:.3e}", f"{1 / mu:.3f}"])


if __name__ == "__main__":
    main()
