import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncg import io
from ncg.channels import bit_flip, depolarizing_pauli, three_qubit_bit_flip
from ncg.cli import EXIT_INVARIANT, EXIT_NO_WITNESS, EXIT_OK, EXIT_PARSE, EXIT_SCALE_LIMIT, main
from ncg.matcore import adjoint, matrix_unit, random_unitary
from ncg.opsys import Graph, Projection, normalize
from oracles import compression_dim, corner_family, random_hermitian

seeds = st.integers(0, 2**32 - 1)


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    report = json.loads(out)
    assert report["exit_code"] == code
    return code, report


def matrices_doc(mats):
    return {"type": "matrices", "dim": mats[0].shape[0], "matrices": [io.encode_complex_array(m) for m in mats]}


def full_algebra_doc(d):
    return matrices_doc([matrix_unit(d, i, j) for i in range(d) for j in range(d)])


# ---------------------------------------------------------------- io


def test_graph_round_trip():
    g = Graph.cycle(5)
    doc = io.loads(io.dumps(io.graph_to_doc(g, "reflexive")))
    g2 = io.graph_from_doc(doc)
    assert g2.vertex_count == 5 and g2.sorted_edges() == g.sorted_edges()
    assert doc["convention"] == "reflexive"


@given(seeds, st.integers(1, 5))
def test_system_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    v = normalize([rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))], d)
    doc = io.loads(io.dumps(io.system_to_doc(v)))
    v2 = io.system_from_doc(doc)
    assert v2.basis.shape == v.basis.shape
    assert np.abs(v2.basis - v.basis).max() <= 1e-15
    again = io.loads(io.dumps(io.system_to_doc(v2)))
    assert again == doc


def test_channel_and_projection_round_trip(rng):
    ch = three_qubit_bit_flip(0.2)
    ch2 = io.channel_from_doc(io.loads(io.dumps(io.channel_to_doc(ch))))
    assert all(np.array_equal(a, b) for a, b in zip(ch.kraus, ch2.kraus))
    p = Projection(random_unitary(4, rng)[:, :2])
    p2 = io.projection_from_doc(io.loads(io.dumps(io.projection_to_doc(p))))
    assert np.abs(p2.columns - p.columns).max() <= 1e-15


def test_schema_rejects_malformed():
    with pytest.raises(io.ParseError):
        io.loads("{not json")
    with pytest.raises(io.ParseError):
        io.loads("[1, 2]")
    with pytest.raises(io.ParseError):
        io.loads(json.dumps({"type": "graph", "vertices": 3}))
    with pytest.raises(io.ParseError):
        io.loads(json.dumps({"type": "matrices", "dim": 1, "matrices": [[["1+0j"]]]}))
    with pytest.raises(io.ParseError):
        io.system_from_doc(io.loads(json.dumps({"type": "matrices", "dim": 2, "matrices": [[[[1, 0]]]]})))


def test_invariant_violations():
    doc = io.system_to_doc(normalize([random_hermitian(2, np.random.default_rng(0))], 2))
    doc["basis"] = doc["basis"][1:]
    doc["dimension"] = 1
    with pytest.raises(io.InvariantError):
        io.system_from_doc(io.loads(json.dumps(doc)))
    with pytest.raises(io.InvariantError):
        io.graph_from_doc({"vertices": 3, "edges": [[0, 0]]})


def test_type_inferred_from_keys():
    assert io.loads(json.dumps({"vertices": 2, "edges": []}))["type"] == "graph"
    assert io.loads(json.dumps({"m": 2}))["type"] == "params"


def test_jsonable_handles_tuple_keys_and_numpy():
    out = io.to_jsonable({(1, 0, 1): np.float64(0.5), "z": np.array([1j]), "b": np.bool_(True)})
    assert out == {"1,0,1": 0.5, "z": [[0.0, 1.0]], "b": True}


# ---------------------------------------------------------------- cli: build


def test_build_cycle(tmp_path, capsys):
    path = write(tmp_path, "c5.json", io.graph_to_doc(Graph.cycle(5)))
    code, rep = run(capsys, "build", path)
    assert code == EXIT_OK and rep["result"]["dimension"] == 11
    code, rep = run(capsys, "build", path, "--convention", "reflexive")
    assert rep["result"]["dimension"] == 15


def test_build_channel_and_empty_graph(tmp_path, capsys):
    code, rep = run(capsys, "build", write(tmp_path, "bf.json", io.channel_to_doc(bit_flip(0.1))))
    assert code == EXIT_OK and rep["result"]["dimension"] == 2
    code, rep = run(capsys, "build", write(tmp_path, "e.json", {"vertices": 4, "edges": []}))
    assert rep["result"]["dimension"] == 1


def test_build_errors(tmp_path, capsys):
    code, rep = run(capsys, "build", write(tmp_path, "bad.json", "{oops"))
    assert code == EXIT_PARSE and "error" in rep
    code, _ = run(capsys, "build", str(tmp_path / "missing.json"))
    assert code == EXIT_PARSE
    code, _ = run(capsys, "build", write(tmp_path, "loop.json", {"vertices": 3, "edges": [[1, 1]]}))
    assert code == EXIT_INVARIANT
    doc = io.system_to_doc(normalize([], 2))
    doc["basis"] = [io.encode_complex_array(matrix_unit(2, 0, 1))]
    code, _ = run(capsys, "build", write(tmp_path, "nonunital.json", doc))
    assert code == EXIT_INVARIANT
    assert main(["build"]) == EXIT_PARSE
    capsys.readouterr()


# ---------------------------------------------------------------- cli: search


def test_search_exit_codes(tmp_path, capsys):
    full = write(tmp_path, "m3.json", full_algebra_doc(3))
    code, rep = run(capsys, "search", full, "--mode", "clique", "--k", 2)
    assert code == EXIT_OK and rep["result"]["found"]
    scal = write(tmp_path, "scalars.json", matrices_doc([np.eye(3)]))
    code, rep = run(capsys, "search", scal, "--mode", "clique", "--k", 2)
    assert code == EXIT_NO_WITNESS
    code, _ = run(capsys, "search", scal, "--mode", "anticlique", "--k", 3)
    assert code == EXIT_INVARIANT


def test_search_planted_anticlique(tmp_path, capsys):
    rng = np.random.default_rng(4)
    d = 10
    gens = []
    for _ in range(3):
        a = np.zeros((d, d), dtype=complex)
        a[:5, :5] = random_hermitian(5, rng)
        gens.append(a)
    u = random_unitary(d, rng)
    path = write(tmp_path, "planted.json", matrices_doc([u @ a @ adjoint(u) for a in gens]))
    code, rep = run(capsys, "search", path, "--mode", "anticlique", "--k", 2, "--seed", 1)
    assert code == EXIT_OK
    assert rep["result"]["compression_dimension"] == 1
    cols = io.projection_from_doc(rep["result"]["projection"]).columns
    v = normalize([u @ a @ adjoint(u) for a in gens], d)
    assert compression_dim(list(v.basis), cols) == 1


# ---------------------------------------------------------------- cli: construct


def test_construct_bundled_clique_cert(capsys):
    code, rep = run(capsys, "construct", "clique_cert")
    assert code == EXIT_OK
    bounds = rep["result"]["certificate"]["bounds"]
    assert len([k for k in bounds if k.startswith("2,")]) == 4
    assert all(b <= 0.5 for k, b in bounds.items() if k.startswith("2,"))
    assert rep["result"]["identity"].startswith("‖E_rs")


def test_construct_dilation(tmp_path, capsys):
    doc = {"type": "params", "operators": [io.encode_complex_array(np.eye(3))],
           "vectors": [io.encode_complex_array(0.25 * np.eye(3)[0])]}
    code, rep = run(capsys, "construct", "dilation", write(tmp_path, "dil.json", doc))
    assert code == EXIT_OK
    assert max(rep["result"]["certificate"]["residuals"]) <= 1e-10


def test_construct_spanning_scale_limit(tmp_path, capsys):
    ops = [matrix_unit(3, i, i) for i in range(3)]
    doc = {"type": "params", "m": 2, "operators": [io.encode_complex_array(a) for a in ops]}
    code, rep = run(capsys, "construct", "spanning", write(tmp_path, "span.json", doc))
    assert code == EXIT_SCALE_LIMIT
    assert "partial" in rep["result"]


def test_construct_other_lemmas(tmp_path, capsys):
    rng = np.random.default_rng(2)
    diags = rng.standard_normal((4, 6)).tolist()
    code, rep = run(capsys, "construct", "triangularize",
                    write(tmp_path, "tri.json", {"type": "params", "diagonals": diags}))
    assert code == EXIT_OK and rep["result"]["checks"]["triangular"]
    code, rep = run(capsys, "construct", "cluster",
                    write(tmp_path, "cl.json", {"type": "params", "eps": 0.1, "diagonals": [[1, 1, 1, 5]]}))
    assert code == EXIT_OK and rep["result"]["certificate"]["indices"] == [0, 1, 2]
    code, _ = run(capsys, "construct", "cluster",
                  write(tmp_path, "cl2.json", {"type": "params", "eps": 0.1, "min_size": 2,
                                              "diagonals": [[0, 1, 2, 3]]}))
    assert code == EXIT_SCALE_LIMIT
    mats = [io.encode_complex_array(random_hermitian(5, rng)) for _ in range(2)]
    code, rep = run(capsys, "construct", "reduce_diag",
                    write(tmp_path, "rd.json", {"type": "params", "matrices": mats}))
    assert code == EXIT_OK and rep["result"]["checks"]["orthogonality"]
    ops = [io.encode_complex_array(a) for a in corner_family(2, 5, 7, rng)]
    code, rep = run(capsys, "construct", "corners",
                    write(tmp_path, "co.json", {"type": "params", "n": 2, "operators": ops}))
    assert code == EXIT_OK


def test_construct_needs_params(capsys):
    code, _ = run(capsys, "construct", "dilation")
    assert code == EXIT_PARSE


# ---------------------------------------------------------------- cli: probe and channels


def test_probe_commands(capsys):
    code, rep = run(capsys, "probe", "compact_K_example", "--dims", "16,32,64")
    assert code == EXIT_OK and rep["result"]["kind"] == "obstruction_evidence"
    code, rep = run(capsys, "probe", "full_algebra", "--dims", "4,5,6")
    assert rep["result"]["kind"] == "clique"
    code, _ = run(capsys, "probe", "full_algebra", "--dims", "4,5")
    assert code == EXIT_PARSE


def test_verify_kl_and_find_code(tmp_path, capsys):
    ch = write(tmp_path, "rep.json", io.channel_to_doc(three_qubit_bit_flip(0.1)))
    good = write(tmp_path, "good.json", io.projection_to_doc(Projection.coordinates(8, [0, 7])))
    bad = write(tmp_path, "bad.json", io.projection_to_doc(Projection.coordinates(8, [0, 4])))
    code, rep = run(capsys, "verify-kl", ch, good)
    assert code == EXIT_OK and rep["result"]["max_residual"] <= 1e-10
    code, _ = run(capsys, "verify-kl", ch, bad)
    assert code == EXIT_NO_WITNESS
    code, rep = run(capsys, "find-code", ch, "--k", 2)
    assert code == EXIT_OK and rep["result"]["report"]["passed"]
    dep = write(tmp_path, "dep.json", io.channel_to_doc(depolarizing_pauli()))
    code, _ = run(capsys, "find-code", dep, "--k", 2)
    assert code == EXIT_INVARIANT


def test_subchannel_warning_reported(tmp_path, capsys):
    doc = {"type": "channel", "in_dim": 2, "out_dim": 2, "kraus": [io.encode_complex_array(0.5 * np.eye(2))]}
    code, rep = run(capsys, "build", write(tmp_path, "sub.json", doc))
    assert code == EXIT_OK and rep["warnings"]


# ---------------------------------------------------------------- reproducibility


def strip_timestamp(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return json.dumps(doc, sort_keys=True)


def test_reports_identical_apart_from_timestamp(tmp_path, capsys):
    path = write(tmp_path, "c6.json", io.graph_to_doc(Graph.cycle(6)))
    outs = []
    for _ in range(2):
        main(["search", path, "--mode", "anticlique", "--k", "3", "--seed", "5"])
        outs.append(capsys.readouterr().out)
    a, b = (o.splitlines() for o in outs)
    assert [x for x in a if "timestamp" not in x] == [x for x in b if "timestamp" not in x]
    assert strip_timestamp(outs[0]) == strip_timestamp(outs[1])


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, "e.json", {"vertices": 2, "edges": []})
    monkeypatch.setenv("NCG_SEED", "17")
    _, rep = run(capsys, "build", path)
    assert rep["config"]["seed"] == 17
    _, rep = run(capsys, "build", path, "--seed", 3)
    assert rep["config"]["seed"] == 3
    monkeypatch.setenv("NCG_SEED", "x")
    code, _ = run(capsys, "build", path)
    assert code == EXIT_PARSE


def test_out_flag_writes_file(tmp_path, capsys):
    path = write(tmp_path, "e.json", {"vertices": 2, "edges": []})
    out = tmp_path / "report.json"
    assert main(["build", path, "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["result"]["dimension"] == 1


def test_module_entry_point(tmp_path):
    path = write(tmp_path, "e.json", {"vertices": 3, "edges": [[0, 1]]})
    proc = subprocess.run([sys.executable, "-m", "ncg", "build", path], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["dimension"] == 3
