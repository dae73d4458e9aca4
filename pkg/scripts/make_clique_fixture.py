"""Regenerate the bundled clique-certificate params (16 random diagonals on C^32)."""
import argparse
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "ncg" / "data" / "clique_cert_m2.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    diags = rng.standard_normal((16, args.dim)).round(6)
    doc = {"type": "params", "m": 2, "k_max": 16, "diagonals": diags.tolist()}
    args.out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
