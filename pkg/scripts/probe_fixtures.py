"""Run the multi-scale probe on every fixture family and print a per-scale table as CSV."""
import argparse
import csv
import sys

from ncg.opsys import FixtureKind
from ncg.ramsey import SearchConfig, trichotomy_probe

COLUMNS = ["kind", "N", "system_dimension", "reduction_length", "pipeline", "compression_dimension",
           "leg_complement_dimension", "obstruction_score", "clique_rank_tried", "clique_found", "verdict"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="16,32,64")
    ap.add_argument("--kinds", default=",".join(k.value for k in FixtureKind))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    dims = [int(x) for x in args.dims.split(",")]
    cfg = SearchConfig(seed=args.seed)
    out = csv.DictWriter(sys.stdout, COLUMNS, extrasaction="ignore")
    out.writeheader()
    summary = []
    for kind in args.kinds.split(","):
        kd = dims if kind != FixtureKind.FULL_ALGEBRA.value else [4, 5, 6]
        verdict = trichotomy_probe(kind, kd, cfg)
        for row in verdict.metrics["scales"]:
            out.writerow({"kind": kind, **row})
        summary.append((kind, verdict.kind))
    for kind, v in summary:
        print(f"# {kind}: {v}", file=sys.stderr)


if __name__ == "__main__":
    main()
