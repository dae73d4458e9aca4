"""One test per acceptance criterion; each prints an ``ACCEPTANCE n: PASS/FAIL`` line."""
import itertools
import time
import warnings

import numpy as np

from ncg.channels import QuantumChannel, basis_projection, confusability, kl_verify, three_qubit_bit_flip
from ncg.constructions import (
    clique_certificate,
    diagonal_from_corners,
    dilation_isometry,
    reduce_to_diagonal,
    spanning_vectors,
    triangularize_diagonals,
)
from ncg.matcore import DEFAULT_TOL, adjoint, random_frame, random_unitary
from ncg.opsys import (
    PAPER_LITERAL,
    REFLEXIVE,
    FixtureKind,
    Graph,
    Projection,
    TruncationSpec,
    compress,
    dimension,
    fixture,
    from_graph,
    normalize,
    trace_functional,
    trace_generator,
)
from ncg.ramsey import SearchConfig, find_anticlique, is_quantum_anticlique
from oracles import (
    compression_dim,
    corner_family,
    dilation_target,
    finite_support_family,
    gram_rank,
    graph_dims,
    haar_unitary,
    is_clique,
    is_independent,
)


def test_acceptance_1_dilation_identity(report_line):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_iso, worst_res, worst_oracle = 0.0, 0.0, 0.0
    for _ in range(50):
        d = int(rng.integers(1, 33))
        count = int(rng.integers(1, d + 1))
        n_dim = int(rng.integers(1, d + 1))
        ops = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
               for _ in range(int(rng.integers(1, 6)))]
        xs = []
        for n in range(1, count + 1):
            z = rng.standard_normal(n_dim) + 1j * rng.standard_normal(n_dim)
            xs.append(z / np.linalg.norm(z) * 2.0 ** (-(n + 1)) * rng.uniform(0.05, 1.0))
        cert = dilation_isometry(ops, xs)
        worst_iso = max(worst_iso, cert.isometry_residual)
        worst_res = max(worst_res, max(cert.residuals))
        # second route: apply the isometry directly and compare with the double sum
        v1 = cert.isometry[:d]
        for a in ops:
            got = adjoint(v1) @ a @ v1
            worst_oracle = max(worst_oracle, np.abs(got - dilation_target(a[:count, :count], xs)).max())
    elapsed = time.perf_counter() - t0
    ok = worst_iso <= 1e-10 and worst_res <= 1e-8 and worst_oracle <= 1e-8 and elapsed < 10
    report_line(1, ok, f"max|V*V-I|={worst_iso:.1e} max residual={worst_res:.1e} "
                       f"oracle={worst_oracle:.1e} time={elapsed:.2f}s")
    assert ok


def test_acceptance_2_spanning_family(report_line):
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    rows, ok = [], True
    for m in range(1, 6):
        ops = finite_support_family(m * m, m * m + 2, rng)
        fam = spanning_vectors(ops, m)
        rank = gram_rank(list(fam.operators))
        margin = min(fam.margins)
        ok &= rank == m * m and margin >= 10 * DEFAULT_TOL.rank_tol
        rows.append(f"m={m}:rank={rank},margin={margin:.2e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    report_line(2, ok, " ".join(rows) + f" time={elapsed:.2f}s")
    assert ok


def test_acceptance_3_clique_certificate(report_line):
    t0 = time.perf_counter()
    rows, ok = [], True
    for m, seed in ((2, 303), (3, 304)):
        k_max = 4 * m * m
        rng = np.random.default_rng(seed)
        fam = triangularize_diagonals([np.diag(rng.standard_normal(2 * k_max)) for _ in range(k_max)])
        cert = clique_certificate(fam, m, k_max)
        top = [b for (mu, _, _), b in cert.bounds.items() if mu == m]
        worst = max(top)
        ok &= len(top) == m * m and worst <= 1.0 / m
        levels = ",".join(f"mu{mu}={cert.level_max(mu):.2e}" for mu in range(1, m + 1))
        rows.append(f"m={m},K_max={k_max}:max={worst:.2e} [{levels}]")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    report_line(3, ok, " ".join(rows) + f" time={elapsed:.2f}s")
    assert ok


def test_acceptance_4_trace_identities(report_line):
    n = 64
    gens = [trace_generator(j, n) for j in range(1, n)]
    worst, worst_unit = 0.0, 0.0
    for m in range(1, n):
        t = trace_functional(m, n)
        worst_unit = max(worst_unit, abs(np.trace(t)))
        for a in gens:
            worst = max(worst, abs(np.sum(t * a.T)))
    ok = worst <= 1e-10 and worst_unit <= 1e-10
    report_line(4, ok, f"N={n} max|tr(T_m A_n)|={worst:.1e} max|tr(T_m)|={worst_unit:.1e}")
    assert ok


def test_acceptance_5_weaver_fixture(report_line):
    rng = np.random.default_rng(505)
    rows, ok = [], True
    for n in (16, 32, 64):
        v = fixture(TruncationSpec(n, FixtureKind.WEAVER))
        q = Projection.coordinates(n, range(1, n))
        dq = dimension(compress(v, q))
        dq_oracle = compression_dim(list(v.basis), q.columns)
        with_leg = []
        for _ in range(10):
            s = [0] + sorted(rng.choice(np.arange(1, n), n // 2 - 1, replace=False).tolist())
            with_leg.append(dimension(compress(v, Projection.coordinates(n, s))))
        ok &= dq == dq_oracle == 2 and min(with_leg) >= 3
        rows.append(f"N={n}:dim(QVQ)={dq},min dim with e1={min(with_leg)}")
    report_line(5, ok, " ".join(rows))
    assert ok


def test_acceptance_6_graph_correspondence(report_line):
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    mismatches, checked = 0, 0
    for mask in range(2 ** len(pairs)):
        edges = [e for i, e in enumerate(pairs) if mask >> i & 1]
        g = Graph.from_edges(n, edges)
        lit, refl = from_graph(g, PAPER_LITERAL), from_graph(g, REFLEXIVE)
        for k in range(1, n + 1):
            for s in itertools.combinations(range(n), k):
                p = Projection.coordinates(n, s)
                d_lit, d_refl = dimension(compress(lit, p)), dimension(compress(refl, p))
                o_lit, o_refl = graph_dims(n, edges, s)
                checked += 1
                bad = d_lit != o_lit or d_refl != o_refl
                bad |= (d_lit == 1) != is_independent(edges, s)
                bad |= (d_lit == k * k - k + 1) != is_clique(edges, s)
                bad |= (d_refl == k * k) != is_clique(edges, s)
                mismatches += bad
    ok = mismatches == 0 and checked == 64 * 15
    report_line(6, ok, f"graphs=64 subsets checked={checked} mismatches={mismatches}")
    assert ok


def test_acceptance_7_knill_laflamme(report_line):
    rng = np.random.default_rng(707)
    disagreements, passed_count = 0, 0
    for trial in range(100):
        d = int(rng.integers(2, 9))
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, min(3, d - 1) + 1))
        if trial % 2:
            # correctable by construction on the range of W
            w = random_frame(d, k, rng)
            pw = w @ adjoint(w)
            u = haar_unitary(d, rng)
            a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            a /= np.linalg.norm(a)
            kraus = [u @ (a[i] * pw + haar_unitary(d, rng) @ (np.eye(d) - pw)) / np.sqrt(n) for i in range(n)]
            p = Projection(w)
        else:
            z = rng.standard_normal((n * d, d)) + 1j * rng.standard_normal((n * d, d))
            iso, _ = np.linalg.qr(z)
            kraus = [iso[i * d:(i + 1) * d] for i in range(n)]
            p = Projection(random_frame(d, k, rng))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ch = QuantumChannel(tuple(kraus))
        rep = kl_verify(ch, p)
        passed_count += rep.passed
        disagreements += rep.passed != is_quantum_anticlique(confusability(ch), p)
    rep = kl_verify(three_qubit_bit_flip(0.1), basis_projection(8, [0, 7]))
    ok = disagreements == 0 and rep.passed and rep.max_residual <= 1e-10
    report_line(7, ok, f"pairs=100 passed={passed_count} disagreements={disagreements} "
                       f"repetition residual={rep.max_residual:.1e}")
    assert ok


def test_acceptance_8_diagonal_reduction(report_line):
    rng = np.random.default_rng(808)
    worst, lengths = 0.0, []
    for _ in range(25):
        d = int(rng.integers(2, 49))
        gens = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                for _ in range(int(rng.integers(1, 7)))]
        v = normalize(gens, d)
        red = reduce_to_diagonal(v, rng=rng)
        x = red.vectors
        lengths.append(x.shape[1])
        # check against the generators themselves, not only the stored basis
        for a in gens + [adjoint(g) for g in gens]:
            g = adjoint(x) @ a @ x
            worst = max(worst, float(np.max(np.abs(g - np.diag(np.diag(g))), initial=0.0)))
    ok = worst <= 1e-9
    report_line(8, ok, f"systems=25 max|<A x_k, x_l>|={worst:.1e} lengths={min(lengths)}..{max(lengths)}")
    assert ok


def test_acceptance_9_corner_elimination(report_line):
    rng = np.random.default_rng(909)
    rows, ok = [], True
    for n in (2, 3, 4):
        good, worst_off, min_norm = 0, 0.0, np.inf
        for _ in range(100):
            ops = corner_family(n, n + 4, 3 * n * n - 3 * n + 1, rng)
            out = diagonal_from_corners(ops, n)
            norm = float(np.linalg.norm(out.operator))
            off = out.off_diagonal_norm
            worst_off, min_norm = max(worst_off, off), min(min_norm, norm)
            good += norm >= 1e-6 and off <= 1e-8
        ok &= good == 100
        rows.append(f"n={n}:{good}/100 max off={worst_off:.1e} min norm={min_norm:.2f}")
    report_line(9, ok, " ".join(rows))
    assert ok


def test_acceptance_10_planted_search(report_line):
    d, half = 16, 8
    t0 = time.perf_counter()
    found, verified = 0, 0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        gens = [np.diag(np.concatenate([rng.standard_normal(half), np.zeros(d - half)])) for _ in range(3)]
        u = random_unitary(d, rng)
        mats = [u @ a @ adjoint(u) for a in gens]
        v = normalize(mats, d)
        res = find_anticlique(v, 2, SearchConfig(seed=seed))
        if res:
            found += 1
            verified += is_quantum_anticlique(v, res.projection) and compression_dim(mats, res.projection.columns) == 1
    elapsed = time.perf_counter() - t0
    ok = found >= 40 and verified == found
    report_line(10, ok, f"recovered={found}/50 reverified={verified} time={elapsed:.2f}s")
    assert ok
