"""JSON documents: complex entries as ``[re, im]`` pairs, schema-checked on every parse."""
from __future__ import annotations

import dataclasses
import enum
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .channels import QuantumChannel, confusability
from .matcore import DEFAULT_TOL, Tolerance, adjoint, span_rank
from .opsys import PAPER_LITERAL, Graph, OperatorSystem, Projection, from_graph, normalize
from .verdict import Verdict


class ParseError(ValueError):
    """Malformed or schema-violating input."""


class InvariantError(ValueError):
    """Well-formed input that violates a mathematical invariant."""


_KEY_TYPES = (
    ("vertices", "graph"),
    ("kraus", "channel"),
    ("basis", "operator_system"),
    ("columns", "projection"),
    ("matrices", "matrices"),
)


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files("ncg").joinpath("schema.json").read_text())


def infer_type(doc: dict) -> str:
    if "type" in doc:
        return doc["type"]
    for key, kind in _KEY_TYPES:
        if key in doc:
            return kind
    return "params"


def validate(doc) -> dict:
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    doc = dict(doc)
    doc["type"] = infer_type(doc)
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        raise ParseError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from None
    return doc


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return validate(doc)


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text)


def bundled(name: str) -> dict:
    return loads(resources.files("ncg").joinpath("data", name).read_text())


# ---------------------------------------------------------------- arrays


def encode_complex_array(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex_array(x) for x in a]


def decode_complex_array(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ParseError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def decode_matrix(obj) -> np.ndarray:
    try:
        m = decode_complex_array(obj)
    except ValueError as exc:
        raise ParseError(f"ragged matrix: {exc}") from None
    if m.ndim != 2:
        raise ParseError(f"expected a matrix, got shape {m.shape}")
    return m


def _square(m: np.ndarray, d: int, what: str) -> np.ndarray:
    if m.shape != (d, d):
        raise ParseError(f"{what} has shape {m.shape}, expected {(d, d)}")
    return m


# ---------------------------------------------------------------- documents


def graph_to_doc(g: Graph, convention: str | None = None) -> dict:
    doc = {"type": "graph", "vertices": g.vertex_count, "edges": [list(e) for e in g.sorted_edges()]}
    if convention is not None:
        doc["convention"] = convention
    return doc


def graph_from_doc(doc: dict) -> Graph:
    try:
        return Graph.from_edges(doc["vertices"], doc["edges"])
    except ValueError as exc:
        raise InvariantError(str(exc)) from None


def channel_to_doc(ch: QuantumChannel) -> dict:
    return {"type": "channel", "in_dim": ch.in_dim, "out_dim": ch.out_dim,
            "kraus": [encode_complex_array(e) for e in ch.kraus]}


def channel_from_doc(doc: dict, tol: Tolerance = DEFAULT_TOL) -> QuantumChannel:
    kraus = [decode_matrix(e) for e in doc["kraus"]]
    for e in kraus:
        if e.shape != (doc["out_dim"], doc["in_dim"]):
            raise ParseError(f"Kraus operator has shape {e.shape}, expected {(doc['out_dim'], doc['in_dim'])}")
    return QuantumChannel(tuple(kraus), tol)


def system_to_doc(v: OperatorSystem) -> dict:
    return {
        "type": "operator_system",
        "dim": v.ambient_dim,
        "dimension": len(v),
        "basis": [encode_complex_array(a) for a in v.basis],
        "label": v.label,
        "convention": v.convention,
        "graph": graph_to_doc(v.graph) if v.graph is not None else None,
    }


def check_system(v: OperatorSystem, tol: Tolerance = DEFAULT_TOL) -> None:
    """Raise :class:`InvariantError` unless ``v`` is unital, self-adjoint and its basis independent."""
    from .opsys import contains

    d = v.ambient_dim
    if span_rank(list(v.basis), tol) != len(v):
        raise InvariantError("basis is linearly dependent")
    if not contains(v, np.eye(d), tol):
        raise InvariantError("span does not contain the identity")
    for a in v.basis:
        if not contains(v, adjoint(a), tol):
            raise InvariantError("span is not closed under adjoints")


def system_from_doc(doc: dict, tol: Tolerance = DEFAULT_TOL, convention: str | None = None) -> OperatorSystem:
    """Any buildable document as an operator system.

    Graphs use ``convention`` (else the document's, else paper_literal),
    channels give their confusability system, matrix lists are normalised,
    and stored systems are taken verbatim after an invariant check.
    """
    kind = doc["type"]
    if kind == "graph":
        conv = convention or doc.get("convention") or PAPER_LITERAL
        return from_graph(graph_from_doc(doc), conv, tol)
    if kind == "channel":
        return confusability(channel_from_doc(doc, tol), tol)
    if kind == "matrices":
        d = doc["dim"]
        mats = [_square(decode_matrix(m), d, "matrix") for m in doc["matrices"]]
        return normalize(mats, d, tol, label="matrices")
    if kind == "operator_system":
        d = doc["dim"]
        basis = np.stack([_square(decode_matrix(m), d, "basis element") for m in doc["basis"]])
        if "dimension" in doc and doc["dimension"] != len(basis):
            raise ParseError("dimension field disagrees with basis length")
        graph = graph_from_doc(doc["graph"]) if doc.get("graph") else None
        v = OperatorSystem(basis, doc.get("label", ""), graph, doc.get("convention"))
        check_system(v, tol)
        return v
    raise ParseError(f"a {kind} document does not describe an operator system")


def projection_to_doc(p: Projection) -> dict:
    return {"type": "projection", "dim": p.ambient_dim, "rank": p.rank,
            "columns": [encode_complex_array(c) for c in p.columns.T]}


def projection_from_doc(doc: dict, tol: Tolerance = DEFAULT_TOL) -> Projection:
    if doc["type"] != "projection":
        raise ParseError(f"expected a projection document, got {doc['type']}")
    d = doc["dim"]
    cols = [decode_complex_array(c) for c in doc["columns"]]
    if any(c.shape != (d,) for c in cols):
        raise ParseError(f"projection columns must have length {d}")
    w = np.stack(cols, axis=1) if cols else np.zeros((d, 0), dtype=complex)
    try:
        return Projection(w, tol)
    except ValueError as exc:
        raise InvariantError(str(exc)) from None


# ---------------------------------------------------------------- generic encoding


def to_jsonable(obj):
    """Recursively convert results (dataclasses, arrays, tuples-as-keys) to JSON values."""
    if isinstance(obj, Projection):
        return projection_to_doc(obj)
    if isinstance(obj, OperatorSystem):
        return system_to_doc(obj)
    if isinstance(obj, Tolerance):
        return {"rank_tol": obj.rank_tol, "residual_tol": obj.residual_tol}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {(",".join(str(x) for x in k) if isinstance(k, tuple) else str(k)): to_jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_complex_array(obj)
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def verdict_to_doc(v: Verdict) -> dict:
    return {
        "kind": v.kind,
        "projection": projection_to_doc(v.projection) if v.projection is not None else None,
        "metrics": to_jsonable(v.metrics),
        "notes": v.notes,
        "witness": to_jsonable(v.witness) if v.witness is not None else None,
        "scale_limited": v.scale_limited,
    }


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)
