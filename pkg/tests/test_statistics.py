import itertools
from fractions import Fraction

import numpy as np
import pytest

from graphcumulants.counting import StatVector, falling_factorial, inj_counts_batch
from graphcumulants.graph import Graph, GraphSample, erdos_renyi, heterogeneous_sbm, sample_sbm
from graphcumulants.models import sbm_moments
from graphcumulants.statistics import (StatisticsError, build_unbiased_map, check_psd,
                                       cumulant_covariance, cumulant_polynomial,
                                       cumulants_to_moments, cumulants_to_moments_dict,
                                       estimate_cumulants, estimate_moments, moment_covariance,
                                       moments_to_cumulants, moments_to_cumulants_dict,
                                       sample_counts, sample_covariance, unbiased_cumulants)


def all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for bits in itertools.product([0, 1], repeat=len(pairs)):
        yield Graph.from_edges(n, [p for p, b in zip(pairs, bits) if b])


def exact_er_law(n, p, ids, atlas):
    """(weights, per-graph moment matrix) over every graph on n nodes."""
    graphs = list(all_graphs(n))
    adjs = np.stack([g.adjacency() for g in graphs])
    counts = inj_counts_batch(adjs, ids, atlas)
    w = [p ** g.m * (1 - p) ** (n * (n - 1) // 2 - g.m) for g in graphs]
    mu = [[Fraction(int(counts[h][i]), falling_factorial(n, atlas[h].v)) for h in ids]
          for i in range(len(graphs))]
    return w, mu


def named(atlas, poly):
    return {tuple(atlas[g].name for g in mono): c for mono, c in poly.items()}


def test_cumulant_polynomials(atlas):
    assert named(atlas, cumulant_polynomial(1, atlas)) == {("e2_wedge",): 1, ("e1_edge", "e1_edge"): -1}
    path = named(atlas, cumulant_polynomial(atlas.lookup("e3_path"), atlas))
    assert path == {("e3_path",): 1, ("e1_edge", "e2_wedge"): -2, ("e1_edge", "e2_parallel"): -1,
                    ("e1_edge", "e1_edge", "e1_edge"): 2}
    tri = named(atlas, cumulant_polynomial(3, atlas))
    assert tri == {("e3_triangle",): 1, ("e1_edge", "e2_wedge"): -3, ("e1_edge", "e1_edge", "e1_edge"): 2}


def test_unbiased_map_rows(atlas):
    U = build_unbiased_map(3, atlas)
    assert U.L.shape == (5, 8)
    names = lambda row: {atlas[g].name: c for g, c in row.items()}
    assert names(U.row(atlas.lookup("e3_path"))) == {"e3_path": 1, "e3_edge_wedge": -2, "e3_parallel": 1}
    assert names(U.row(1)) == {"e2_wedge": 1, "e2_parallel": -1}
    assert build_unbiased_map(6, atlas).L.shape == (52, 113)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_unbiased_map_annihilates_constant_graphon(atlas, p):
    U = build_unbiased_map(6, atlas)
    vec = np.array([p ** atlas[g].e for g in U.cols])
    out = U.L @ vec
    assert out[0] == pytest.approx(p, abs=1e-12)
    assert np.max(np.abs(out[1:])) < 1e-12


def test_round_trip(atlas, rng):
    ids = atlas.basis(6)
    for _ in range(30):
        mu = {g: float(x) for g, x in zip(ids, rng.random(len(ids)))}
        back = cumulants_to_moments_dict(moments_to_cumulants_dict(mu, 6, atlas), 6, atlas)
        assert max(abs(back[g] - mu[g]) for g in ids) < 1e-12


def test_statvector_wrappers(atlas):
    basis = tuple(atlas.basis(3))
    mu = StatVector(basis, np.array([0.5 ** atlas[g].e for g in basis]), n=10)
    k = moments_to_cumulants(mu, 3, atlas)
    assert k.kind == "cumulant" and k.values[0] == 0.5
    # disconnected cumulants of a constant graphon vanish, so the
    # connected ones determine all moments
    assert np.allclose(cumulants_to_moments(k, 3, atlas).values, mu.values)


def test_er_cumulants_vanish(atlas):
    mu = sbm_moments(erdos_renyi(0.3), atlas.basis(6), atlas)
    k = moments_to_cumulants_dict(mu, 6, atlas)
    assert k[0] == pytest.approx(0.3)
    assert max(abs(k[g]) for g in k if atlas[g].e > 1) < 1e-14


def test_missing_moments_error(atlas):
    with pytest.raises(StatisticsError):
        moments_to_cumulants_dict({0: 0.5}, 2, atlas)


def test_unbiasedness_exact_er(atlas):
    # exact expectation over all graphs on 6 nodes
    p = Fraction(2, 5)
    U = build_unbiased_map(3, atlas)
    w, mu = exact_er_law(6, p, list(U.cols), atlas)
    L = [[int(x) for x in row] for row in U.L]
    for i, g in enumerate(U.rows):
        expect = sum(wi * sum(c * m for c, m in zip(L[i], mi)) for wi, mi in zip(w, mu))
        assert expect == (p if g == 0 else 0)


def test_unbiasedness_exact_sbm(atlas):
    # enumerate block labels and graphs on 4 nodes: E[kappa_hat] equals the model cumulant
    spec = heterogeneous_sbm(0.5, 0.5)
    B = [[Fraction(x).limit_denominator(100) for x in row] for row in spec.B]
    U = build_unbiased_map(2, atlas)
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    graphs = list(all_graphs(n))
    counts = inj_counts_batch(np.stack([g.adjacency() for g in graphs]), list(U.cols), atlas)
    est = []
    for i, _ in enumerate(graphs):
        mu = [Fraction(int(counts[h][i]), falling_factorial(n, atlas[h].v)) for h in U.cols]
        est.append([sum(int(c) * m for c, m in zip(row, mu)) for row in U.L])
    exp = [Fraction(0)] * len(U.rows)
    for labels in itertools.product(range(2), repeat=n):
        pl = Fraction(1, 2 ** n)
        for i, g in enumerate(graphs):
            es = g.edge_set()
            w = pl
            for a, b in pairs:
                q = B[labels[a]][labels[b]]
                w *= q if (a, b) in es else 1 - q
            for j in range(len(exp)):
                exp[j] += w * est[i][j]
    model = moments_to_cumulants_dict(sbm_moments(spec, atlas.basis(2), atlas), 2, atlas)
    assert float(exp[0]) == pytest.approx(model[0], abs=1e-12)
    assert float(exp[1]) == pytest.approx(model[1], abs=1e-12)
    assert model[1] == pytest.approx(0.015625)


@pytest.mark.parametrize("r", [1, 2])
def test_moment_covariance_bruteforce_n4(atlas, r):
    p = Fraction(1, 3)
    basis = atlas.basis(r, connected=True)
    w, mu = exact_er_law(4, p, basis, atlas)
    mean = [sum(wi * m[j] for wi, m in zip(w, mu)) for j in range(len(basis))]
    cov = [[sum(wi * (m[a] - mean[a]) * (m[b] - mean[b]) for wi, m in zip(w, mu))
            for b in range(len(basis))] for a in range(len(basis))]
    mu2r = {g: p ** atlas[g].e for g in atlas.basis(2 * r)}
    got = moment_covariance(mu2r, 4, basis, atlas).values
    assert np.max(np.abs(got - np.array(cov, dtype=float))) < 1e-12


def test_cumulant_covariance_bruteforce_n6(atlas):
    p = Fraction(1, 2)
    U = build_unbiased_map(2, atlas)
    w, mu = exact_er_law(6, p, list(U.cols), atlas)
    kap = [[sum(int(c) * m for c, m in zip(row, mi)) for row in U.L] for mi in mu]
    mean = [sum(wi * k[j] for wi, k in zip(w, kap)) for j in range(len(U.rows))]
    cov = np.array([[float(sum(wi * (k[a] - mean[a]) * (k[b] - mean[b]) for wi, k in zip(w, kap)))
                     for b in range(len(U.rows))] for a in range(len(U.rows))])
    mu4 = {g: p ** atlas[g].e for g in atlas.basis(4)}
    got = cumulant_covariance(mu4, 6, 2, atlas).values
    assert np.max(np.abs(got - cov)) < 1e-12


def test_covariance_vanishes_for_large_n(atlas):
    mu = sbm_moments(heterogeneous_sbm(0.5, 0.25), atlas.basis(6), atlas)
    small = np.abs(cumulant_covariance(mu, 64, 3, atlas).values).max()
    big = np.abs(cumulant_covariance(mu, 4096, 3, atlas).values).max()
    assert big < small / 50


def test_cumulant_covariance_psd(atlas, rng):
    for _ in range(5):
        spec = heterogeneous_sbm(rng.uniform(0.2, 0.6), rng.uniform(0, 0.5))
        mu = sbm_moments(spec, atlas.basis(6), atlas)
        S = cumulant_covariance(mu, int(rng.integers(8, 200)), 3, atlas).values
        lam = np.linalg.eigvalsh(S)
        assert lam.min() >= -1e-9 * lam.max()
        assert np.array_equal(S, S.T)


def test_order1_cumulant_equals_moment_variance(atlas):
    mu = sbm_moments(heterogeneous_sbm(0.4, 0.3), atlas.basis(6), atlas)
    a = cumulant_covariance(mu, 30, 3, atlas).values[0, 0]
    b = moment_covariance(mu, 30, [0], atlas).values[0, 0]
    assert a == pytest.approx(b, rel=1e-12)


def test_single_graph_moment_covariance_is_zero(atlas, rng):
    s = GraphSample([sample_sbm(erdos_renyi(0.5), 12, rng)])
    cov = sample_covariance(s, 3, "moment", atlas)
    assert np.all(cov.values == 0)


def test_repeated_graph_scaling(atlas, rng):
    G = sample_sbm(heterogeneous_sbm(0.5, 0.5), 14, rng)
    one = sample_covariance(GraphSample([G]), 2, "cumulant", atlas).values
    four = sample_covariance(GraphSample([G] * 4), 2, "cumulant", atlas).values
    assert np.allclose(four, one / 4, rtol=1e-12, atol=0)


def test_sample_estimators(atlas):
    G = Graph.from_edges(2, [(0, 1)])
    k = estimate_cumulants(GraphSample([G]), 1, atlas)
    assert k.values.tolist() == [1.0]
    K = Graph.complete(7)
    s = GraphSample([K, Graph.from_edges(7, [])])
    mv = estimate_moments(s, atlas.basis(3, connected=True), atlas)
    assert mv.values.tolist() == [0.5] * 5 and mv.s == 2
    c = sample_counts(s, 3, atlas)
    assert unbiased_cumulants(c[0], 7, 3, atlas)[1] == 0


def test_check_psd():
    S = np.diag([1.0, -1e-12])
    assert np.all(np.linalg.eigvalsh(check_psd(S)) >= 0)
    with pytest.raises(StatisticsError):
        check_psd(np.diag([1.0, -1e-3]))
    assert np.linalg.eigvalsh(check_psd(np.diag([1.0, -1e-3]), strict=False)).min() >= 0
