import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncg.matcore import adjoint, matrix_unit, random_frame, random_unitary
from ncg.opsys import (
    PAPER_LITERAL,
    REFLEXIVE,
    FixtureKind,
    Graph,
    Projection,
    TruncationSpec,
    compress,
    contains,
    dimension,
    fixture,
    from_graph,
    graph_clique_dimension,
    harmonic_diagonal,
    normalize,
    trace_functional,
    trace_generator,
)
from oracles import compression_dim, gram_rank, graph_dims, random_hermitian

seeds = st.integers(0, 2**32 - 1)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(0)
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 3)])
    g = Graph.from_edges(3, [(2, 0), (0, 2)])
    assert g.sorted_edges() == [(0, 2)]
    assert g.adjacent(2, 0) and not g.adjacent(0, 1)


def test_cycle_system_dimensions():
    # 1 + 2|E| and n + 2|E|, frozen from the Gram oracle
    assert dimension(from_graph(Graph.cycle(5), PAPER_LITERAL)) == 11
    assert dimension(from_graph(Graph.cycle(5), REFLEXIVE)) == 15
    assert dimension(from_graph(Graph.empty(4))) == 1
    assert dimension(from_graph(Graph.complete(3), REFLEXIVE)) == 9


def test_graph_system_matches_oracle(rng):
    for _ in range(10):
        n = int(rng.integers(2, 7))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        g = Graph.from_edges(n, edges)
        for conv, idx in ((PAPER_LITERAL, 0), (REFLEXIVE, 1)):
            v = from_graph(g, conv)
            assert len(v) == graph_dims(n, edges, range(n))[idx]


def test_normalize_is_unital_and_self_adjoint(rng):
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(2)]
    v = normalize(mats, 3)
    assert np.allclose(v.basis[0], np.eye(3))
    for a in v.basis:
        assert contains(v, adjoint(a))
    assert len(v) == gram_rank([np.eye(3)] + mats + [adjoint(m) for m in mats])


def test_normalize_rejects_wrong_shape():
    with pytest.raises(ValueError):
        normalize([np.eye(2)], 3)


def test_projection_checks_orthonormality():
    with pytest.raises(ValueError):
        Projection(np.array([[1.0], [1.0]]))
    p = Projection.coordinates(4, [1, 3])
    assert p.rank == 2 and p.ambient_dim == 4
    assert np.allclose(p.matrix, np.diag([0, 1, 0, 1]))


def test_compress_classical_clique_dimensions():
    g = Graph.complete(4)
    for k in range(1, 5):
        p = Projection.coordinates(4, range(k))
        assert dimension(compress(from_graph(g, PAPER_LITERAL), p)) == graph_clique_dimension(k, PAPER_LITERAL)
        assert dimension(compress(from_graph(g, REFLEXIVE), p)) == graph_clique_dimension(k, REFLEXIVE)


def test_compress_dimension_mismatch():
    with pytest.raises(ValueError):
        compress(from_graph(Graph.cycle(4)), Projection.coordinates(5, [0]))


def test_compress_drops_rounding_noise(rng):
    # a conjugated diagonal supported away from the frame compresses to noise, not to a direction
    d = 8
    u = random_unitary(d, rng)
    a = u @ np.diag([1.0, 2.0, 0, 0, 0, 0, 0, 0]) @ adjoint(u)
    v = normalize([a], d)
    p = Projection(u[:, 4:6])
    assert dimension(compress(v, p)) == 1


def test_contains():
    v = from_graph(Graph.cycle(4))
    assert contains(v, matrix_unit(4, 0, 1) + 3 * np.eye(4))
    assert not contains(v, matrix_unit(4, 0, 2))
    assert contains(v, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        contains(v, np.eye(3))


def test_fixture_dimensions():
    assert dimension(fixture(TruncationSpec(4, FixtureKind.WEAVER))) == 9
    assert dimension(fixture(TruncationSpec(8, FixtureKind.WEAVER))) == 17
    assert dimension(fixture(TruncationSpec(8, FixtureKind.TRACE))) == 8
    assert dimension(fixture(TruncationSpec(8, FixtureKind.COMPACT_K))) == 2
    assert dimension(fixture(TruncationSpec(4, FixtureKind.FULL_ALGEBRA))) == 16


def test_truncation_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(2, FixtureKind.WEAVER)
    with pytest.raises(ValueError):
        TruncationSpec(8, "no_such_kind")
    assert TruncationSpec(5, "weaver_example").kind is FixtureKind.WEAVER


def test_trace_fixture_annihilated_by_functionals():
    n = 16
    for m in range(1, n):
        t = trace_functional(m, n)
        assert abs(np.trace(t)) < 1e-12
        for j in range(1, n):
            assert abs(np.trace(t @ trace_generator(j, n))) < 1e-12


def test_weaver_leg_complement_has_dimension_two():
    n = 12
    v = fixture(TruncationSpec(n, FixtureKind.WEAVER))
    q = Projection.coordinates(n, range(1, n))
    comp = compress(v, q)
    assert dimension(comp) == 2
    k_tail = harmonic_diagonal(n)[1:, 1:]
    assert contains(comp, k_tail)


@given(seeds, st.integers(2, 5), st.integers(1, 4), st.integers(1, 3))
def test_compression_dimension_bounds(seed, d, n, k):
    rng = np.random.default_rng(seed)
    k = min(k, d)
    mats = [random_hermitian(d, rng) for _ in range(n)]
    v = normalize(mats, d)
    w = random_frame(d, k, rng)
    dim = dimension(compress(v, Projection(w)))
    assert dim <= min(len(v), k * k)
    assert dim == compression_dim(mats, w)


@given(seeds, st.integers(2, 5))
def test_compression_invariant_under_frame_rotation(seed, d):
    rng = np.random.default_rng(seed)
    mats = [random_hermitian(d, rng) for _ in range(2)]
    v = normalize(mats, d)
    w = random_frame(d, 2, rng)
    u = random_unitary(2, rng)
    assert dimension(compress(v, Projection(w))) == dimension(compress(v, Projection(w @ u)))
