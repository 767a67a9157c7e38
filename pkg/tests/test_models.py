import numpy as np
import pytest

from graphcumulants.counting import falling_factorial, inj_counts_batch
from graphcumulants.graph import GraphError, assortative_sbm, heterogeneous_sbm, sample_sbm_adjacency
from graphcumulants.models import (blend_kronecker, draw_perturbation, perturbation_variances,
                                   sbm_moment, sbm_moment_jacobian, sbm_moments, upper_pairs)


def test_er_moments(atlas):
    for g in atlas:
        assert sbm_moment(g, np.array([[0.3]]), np.array([1.0]), atlas) == pytest.approx(0.3 ** g.e)


def test_closed_forms(atlas):
    rho, eh = 0.4, 0.5
    h = heterogeneous_sbm(rho, eh)
    assert sbm_moment(atlas[1], h.B, h.block_probs, atlas) == pytest.approx(rho ** 2 * (1 + eh ** 2 / 4))
    a = assortative_sbm(0.5, 0.3)
    assert sbm_moment(atlas[0], a.B, a.block_probs, atlas) == pytest.approx(0.5)


def test_moments_match_monte_carlo(atlas, rng):
    spec = assortative_sbm(0.5, 0.4)
    ids = atlas.basis(3)
    n, T = 40, 1000
    adjs = sample_sbm_adjacency(spec, n, T, rng)
    counts = inj_counts_batch(adjs, ids, atlas)
    exact = sbm_moments(spec, ids, atlas)
    for g in ids:
        x = counts[g].astype(float) / falling_factorial(n, atlas[g].v)
        assert abs(x.mean() - exact[g]) < 4 * x.std(ddof=1) / np.sqrt(T) + 1e-15, atlas[g].name


def _fd(g, B, p, atlas, h=1e-6):
    out = []
    for i, j in upper_pairs(len(p)):
        Bp, Bm = B.copy(), B.copy()
        Bp[i, j] += h
        Bm[i, j] -= h
        if i != j:
            Bp[j, i] += h
            Bm[j, i] -= h
        out.append((sbm_moment(g, Bp, p, atlas) - sbm_moment(g, Bm, p, atlas)) / (2 * h))
    return np.array(out)


def test_jacobian_trivial(atlas):
    assert sbm_moment_jacobian(atlas[0], np.array([[0.3]]), np.array([1.0]), atlas)[0] == pytest.approx(1)
    assert sbm_moment_jacobian(atlas[1], np.array([[0.3]]), np.array([1.0]), atlas)[0] == pytest.approx(0.6)


def test_jacobian_finite_differences(atlas, rng):
    worst = 0.0
    for _ in range(20):
        U = rng.uniform(0.1, 0.9, (4, 4))
        B = np.triu(U) + np.triu(U, 1).T
        p = rng.dirichlet(np.ones(4))
        for name in ["e1_edge", "e3_triangle", "e3_edge_wedge", "e4_square", "e6_k4"]:
            g = atlas[atlas.lookup(name)]
            J = sbm_moment_jacobian(g, B, p, atlas)
            F = _fd(g, B, p, atlas)
            worst = max(worst, np.max(np.abs(J - F)) / np.max(np.abs(J)))
    assert worst <= 1e-6


def test_blend_entries():
    rho, eh, ea = 0.4, 0.3, 0.2
    b = blend_kronecker(rho, eh, ea)
    assert b.B0[0, 0] == pytest.approx(rho * (1 + eh) * (1 + ea))
    assert b.B0[0, 2] == pytest.approx(rho * (1 + ea))
    assert b.B0[3, 3] == pytest.approx(rho * (1 - eh) * (1 + ea))
    assert np.array_equal(b.B0, b.B0.T)
    assert np.all(blend_kronecker(0.3, 0, 0).B0 == 0.3)


def test_blend_reduces_to_assortative(atlas):
    b = blend_kronecker(0.5, 0.0, 0.25)
    a = assortative_sbm(0.5, 0.25)
    for g in atlas.basis(4):
        assert sbm_moment(atlas[g], b.B0, b.block_probs, atlas) == pytest.approx(
            sbm_moment(atlas[g], a.B, a.block_probs, atlas), abs=1e-14)


def test_blend_density(atlas, rng):
    for _ in range(10):
        b = blend_kronecker(0.5, rng.uniform(0, 0.5), rng.uniform(0, 0.5))
        assert sbm_moment(atlas[0], b.B0, b.block_probs, atlas) == pytest.approx(0.5, abs=1e-12)


def test_blend_rejects_bad_entries():
    with pytest.raises(GraphError, match=r"B0\[0,0\]"):
        blend_kronecker(0.9, 0.5, 0.5)


def test_perturbation(rng):
    B0 = blend_kronecker(0.5, 0.25, 0.25).B0
    d = draw_perturbation(B0, rng)
    assert np.array_equal(d, d.T)
    draws = np.array([draw_perturbation(B0, rng)[np.triu_indices(4)] for _ in range(20000)])
    assert np.allclose(draws.var(axis=0), perturbation_variances(B0), rtol=0.05)
