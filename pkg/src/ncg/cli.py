"""Command-line entry point.

Exit codes: 0 success or witness found, 2 parse error, 3 invariant
violation, 4 no witness, 5 scale limit reached.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import constructions as cons
from . import io
from .channels import find_code, kl_verify
from .matcore import Tolerance, span_rank
from .opsys import CONVENTIONS, PAPER_LITERAL, FixtureKind, compress, dimension, normalize
from .ramsey import SearchConfig, find_anticlique, find_clique, is_quantum_anticlique, is_quantum_clique, trichotomy_probe

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_NO_WITNESS = 4
EXIT_SCALE_LIMIT = 5

LEMMAS = ("dilation", "spanning", "reduce_diag", "corners", "triangularize", "clique_cert", "cluster")

# the identity each construct report certifies
FORMULAS = {
    "dilation": "V*(A_n ⊕ 0)V = T_n, T_n = Σ_ij α_ij^n x_i x_j*",
    "spanning": "T_n = Σ_{i,j≤n} α_ij^n x_i x_j*, span{T_1..T_{m²}} = M_m",
    "reduce_diag": "⟨A x_k, x_l⟩ = 0 for k ≠ l",
    "corners": "Σ_j c_j A_j diagonal and nonzero",
    "triangularize": "⟨B_k f_i, f_i⟩ = 0 for i < k, ⟨B_k f_k, f_k⟩ = 1",
    "clique_cert": "‖E_rs − Σ_j γ_j V*A_jV‖ ≤ 1/μ",
    "cluster": "|⟨A_k e_i, e_i⟩ − α_k| ≤ eps/2 on the common index set",
}

BUNDLED_PARAMS = {"clique_cert": "clique_cert_m2.json"}


@dataclass(frozen=True)
class RunConfig:
    tol: Tolerance = Tolerance()
    seed: int = 0
    restarts: int = 8
    dims: tuple = (16, 32, 64)
    output_path: str | None = None
    convention: str = PAPER_LITERAL

    def search(self) -> SearchConfig:
        return SearchConfig(seed=self.seed, restarts=self.restarts, tol=self.tol)

    def as_dict(self) -> dict:
        return {"rank_tol": self.tol.rank_tol, "residual_tol": self.tol.residual_tol, "seed": self.seed,
                "restarts": self.restarts, "dims": list(self.dims), "convention": self.convention}


class CommandFailure(Exception):
    def __init__(self, code: int, message: str, result=None):
        super().__init__(message)
        self.code = code
        self.result = result


def _parse_dims(text: str) -> tuple:
    try:
        dims = tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --dims {text!r}") from None
    return dims


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=1e-9, help="relative rank cutoff")
    common.add_argument("--tol-res", type=float, default=1e-8, help="residual tolerance")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $NCG_SEED or 0)")
    common.add_argument("--restarts", type=int, default=8)
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    p = argparse.ArgumentParser(prog="ncg", description="Operator-system clique/anticlique toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="normalise a graph, channel or matrix list")
    b.add_argument("input")
    b.add_argument("--convention", choices=CONVENTIONS, default=None)

    s = sub.add_parser("search", parents=[common], help="search for a quantum clique or anticlique")
    s.add_argument("system")
    s.add_argument("--mode", choices=("clique", "anticlique"), required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--convention", choices=CONVENTIONS, default=None)

    c = sub.add_parser("construct", parents=[common], help="run one construction and certify it")
    c.add_argument("lemma", choices=LEMMAS)
    c.add_argument("params", nargs="?", default=None, help="params JSON (clique_cert defaults to a bundled family)")

    r = sub.add_parser("probe", parents=[common], help="multi-scale trichotomy probe on a fixture family")
    r.add_argument("kind", choices=[k.value for k in FixtureKind])
    r.add_argument("--dims", type=_parse_dims, default=(16, 32, 64))
    r.add_argument("--eps", type=float, default=0.05)
    r.add_argument("--rank-cut", type=int, default=4)
    r.add_argument("--bounded-dim", type=int, default=4)

    v = sub.add_parser("verify-kl", parents=[common], help="Knill-Laflamme check of a code projection")
    v.add_argument("channel")
    v.add_argument("projection")

    f = sub.add_parser("find-code", parents=[common], help="search for an error-correcting code")
    f.add_argument("channel")
    f.add_argument("--k", type=int, required=True)
    return p


def run_config(args) -> RunConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get("NCG_SEED")
        try:
            seed = int(env) if env is not None else 0
        except ValueError:
            raise CommandFailure(EXIT_PARSE, f"NCG_SEED must be an integer, got {env!r}") from None
    try:
        tol = Tolerance(args.tol_rank, args.tol_res)
    except ValueError as exc:
        raise CommandFailure(EXIT_PARSE, str(exc)) from None
    if args.restarts < 1:
        raise CommandFailure(EXIT_PARSE, "--restarts must be at least 1")
    return RunConfig(tol=tol, seed=seed, restarts=args.restarts,
                     dims=tuple(getattr(args, "dims", (16, 32, 64))),
                     output_path=args.out, convention=getattr(args, "convention", None) or PAPER_LITERAL)


# ---------------------------------------------------------------- commands


def cmd_build(args, cfg: RunConfig):
    doc = io.load(args.input)
    v = io.system_from_doc(doc, cfg.tol, args.convention)
    return io.system_to_doc(v), EXIT_OK


def cmd_search(args, cfg: RunConfig):
    v = io.system_from_doc(io.load(args.system), cfg.tol, args.convention)
    d = v.ambient_dim
    k = args.k
    if args.mode == "anticlique" and not 1 <= k < d:
        raise CommandFailure(EXIT_INVARIANT, f"anticlique search needs 1 <= k < {d}")
    if args.mode == "clique" and not 1 <= k <= d:
        raise CommandFailure(EXIT_INVARIANT, f"clique search needs 1 <= k <= {d}")
    search = cfg.search()
    if args.mode == "anticlique":
        res = find_anticlique(v, k, search)
        check = is_quantum_anticlique
    else:
        res = find_clique(v, k, search)
        check = is_quantum_clique
    verified = bool(res) and check(v, res.projection, cfg.tol)
    result = {
        "mode": args.mode,
        "k": k,
        "found": verified,
        "strategy": res.strategy,
        "projection": res.projection,
        "compression_dimension": dimension(compress(v, res.projection, cfg.tol), cfg.tol) if res else None,
        "metrics": res.metrics,
    }
    return result, EXIT_OK if verified else EXIT_NO_WITNESS


def _params(args) -> dict:
    if args.params is None:
        name = BUNDLED_PARAMS.get(args.lemma)
        if name is None:
            raise CommandFailure(EXIT_PARSE, f"construct {args.lemma} needs a params file")
        return io.bundled(name)
    return io.load(args.params)


def _require(doc: dict, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise CommandFailure(EXIT_PARSE, f"params missing {missing}")


def _operators(doc: dict) -> list:
    if "operators" in doc:
        return [io.decode_matrix(m) for m in doc["operators"]]
    if "diagonals" in doc:
        return [np.diag(np.asarray(g, dtype=float)).astype(complex) for g in doc["diagonals"]]
    raise CommandFailure(EXIT_PARSE, "params need 'operators' or 'diagonals'")


def _construct(lemma: str, doc: dict, tol: Tolerance):
    """Run one construction; return ``(certificate, checks)``."""
    if lemma == "dilation":
        _require(doc, "operators", "vectors")
        vecs = [io.decode_complex_array(x) for x in doc["vectors"]]
        cert = cons.dilation_isometry(_operators(doc), vecs, tol)
        return cert, {"isometry": cert.isometry_residual <= tol.residual_tol,
                      "residuals": max(cert.residuals) <= tol.residual_tol}
    if lemma == "spanning":
        _require(doc, "operators", "m")
        fam = cons.spanning_vectors(_operators(doc), doc["m"], tol)
        caps = all(np.linalg.norm(fam.vectors[:, n]) <= cons.norm_cap(n + 1) for n in range(len(fam)))
        return fam, {"spans": span_rank(list(fam.operators), tol) == doc["m"] ** 2, "caps": caps}
    if lemma == "reduce_diag":
        _require(doc, "matrices")
        mats = [io.decode_matrix(m) for m in doc["matrices"]]
        v = normalize(mats, mats[0].shape[0], tol)
        red = cons.reduce_to_diagonal(v, tol, np.random.default_rng(doc.get("seed", 0)))
        x = red.vectors
        g = np.einsum("ik,nij,jl->nkl", np.conj(x), v.basis, x)
        off = g * (1 - np.eye(x.shape[1]))[None]
        worst = float(np.max(np.abs(off), initial=0.0))
        return red, {"orthogonality": worst <= tol.residual_tol, "max_off_diagonal": worst}
    if lemma == "corners":
        _require(doc, "operators", "n")
        ops = _operators(doc)
        out = cons.diagonal_from_corners(ops, doc["n"], tol)
        scale = max(np.linalg.norm(a) for a in ops)
        return out, {"diagonal": out.off_diagonal_norm <= tol.residual_tol * max(1.0, scale),
                     "nonzero": float(np.linalg.norm(out.operator)) >= tol.residual_tol}
    if lemma == "triangularize":
        fam = cons.triangularize_diagonals(_operators(doc), tol)
        if fam.scale_limited:
            raise cons.ScaleLimitError("elimination stalled", partial=fam)
        return fam, _triangular_checks(fam, doc, tol)
    if lemma == "clique_cert":
        _require(doc, "m", "k_max")
        fam = cons.triangularize_diagonals(_operators(doc), tol)
        cert = cons.clique_certificate(fam, doc["m"], doc["k_max"], tol)
        levels = {mu: cert.level_max(mu) for mu in range(1, doc["m"] + 1)}
        return cert, {"bounds": cert.passed, "level_max": levels,
                      "solve": max(cert.solve_residuals.values()) <= tol.residual_tol}
    if lemma == "cluster":
        _require(doc, "eps")
        ops = _operators(doc)
        res = cons.cluster_diagonals(ops, doc["eps"], doc.get("min_size", 1), tol)
        if res.scale_limited:
            raise cons.ScaleLimitError(f"cluster size {len(res.indices)} below minimum", partial=res)
        within = all(np.max(np.abs(np.real(np.diag(a))[res.indices] - s), initial=0.0) <= doc["eps"] / 2 + 1e-15
                     for a, s in zip(ops, res.shifts))
        return res, {"within_eps": within}
    raise CommandFailure(EXIT_PARSE, f"unknown lemma {lemma}")


def _triangular_checks(fam, doc, tol: Tolerance) -> dict:
    pat = fam.pattern()
    tri = np.allclose(np.tril(pat, -1), 0, atol=tol.residual_tol) and np.allclose(np.diag(pat), 1, atol=tol.residual_tol)
    ops = _operators(doc)
    diags = np.stack([np.diag(a) for a in ops])
    recon = float(np.max(np.abs(fam.coefficients @ diags - fam.diagonals), initial=0.0))
    return {"triangular": bool(tri), "reconstruction": recon <= tol.residual_tol, "max_reconstruction_error": recon}


def _passed(checks: dict) -> bool:
    return all(v for v in checks.values() if isinstance(v, (bool, np.bool_)))


def cmd_construct(args, cfg: RunConfig):
    doc = _params(args)
    try:
        cert, checks = _construct(args.lemma, doc, cfg.tol)
    except cons.ScaleLimitError as exc:
        raise CommandFailure(EXIT_SCALE_LIMIT, str(exc),
                             {"lemma": args.lemma, "identity": FORMULAS[args.lemma], "partial": exc.partial}) from None
    except cons.ConstructionError as exc:
        raise CommandFailure(EXIT_INVARIANT, str(exc)) from None
    result = {"lemma": args.lemma, "identity": FORMULAS[args.lemma], "certificate": cert, "checks": checks}
    return result, EXIT_OK if _passed(checks) else EXIT_INVARIANT


def cmd_probe(args, cfg: RunConfig):
    search = SearchConfig(seed=cfg.seed, restarts=cfg.restarts, tol=cfg.tol, eps=args.eps,
                          rank_cut=args.rank_cut, bounded_dim=args.bounded_dim)
    try:
        verdict = trichotomy_probe(args.kind, args.dims, search)
    except ValueError as exc:
        raise CommandFailure(EXIT_PARSE, str(exc)) from None
    return io.verdict_to_doc(verdict), EXIT_OK


def cmd_verify_kl(args, cfg: RunConfig):
    doc = io.load(args.channel)
    if doc["type"] != "channel":
        raise CommandFailure(EXIT_PARSE, "verify-kl needs a channel document")
    ch = io.channel_from_doc(doc, cfg.tol)
    p = io.projection_from_doc(io.load(args.projection), cfg.tol)
    if p.ambient_dim != ch.in_dim:
        raise CommandFailure(EXIT_INVARIANT, "projection and channel input dimensions differ")
    rep = kl_verify(ch, p, cfg.tol)
    return rep, EXIT_OK if rep.passed else EXIT_NO_WITNESS


def cmd_find_code(args, cfg: RunConfig):
    doc = io.load(args.channel)
    if doc["type"] != "channel":
        raise CommandFailure(EXIT_PARSE, "find-code needs a channel document")
    ch = io.channel_from_doc(doc, cfg.tol)
    if not 1 <= args.k < ch.in_dim:
        raise CommandFailure(EXIT_INVARIANT, f"find-code needs 1 <= k < {ch.in_dim}")
    found = find_code(ch, args.k, cfg.search())
    if found is None:
        return {"found": False, "k": args.k}, EXIT_NO_WITNESS
    p, rep = found
    return {"found": True, "k": args.k, "projection": p, "report": rep}, EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "search": cmd_search,
    "construct": cmd_construct,
    "probe": cmd_probe,
    "verify-kl": cmd_verify_kl,
    "find-code": cmd_find_code,
}


def _emit(report: dict, path: str | None) -> None:
    text = io.dumps(report) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    report = {"command": args.command, "timestamp": datetime.now(timezone.utc).isoformat()}
    try:
        cfg = run_config(args)
        report["config"] = cfg.as_dict()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result, code = COMMANDS[args.command](args, cfg)
        if caught:
            report["warnings"] = sorted({str(w.message) for w in caught})
    except CommandFailure as exc:
        result, code = exc.result, exc.code
        report["error"] = str(exc)
    except io.ParseError as exc:
        result, code = None, EXIT_PARSE
        report["error"] = str(exc)
    except (io.InvariantError, ValueError) as exc:
        result, code = None, EXIT_INVARIANT
        report["error"] = str(exc)
    report["result"] = result
    report["exit_code"] = code
    _emit(report, args.out)
    if "error" in report:
        print(f"ncg: {report['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
