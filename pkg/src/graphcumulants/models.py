"""Closed-form moments of stochastic block models and their derivatives.

An SBM with block weights ``p`` and connectivity ``B`` is a step graphon, so
the (injective homomorphism) moment of a pattern ``g`` is

    mu_g = sum over block labelings b of V(g) of
           prod_u p[b(u)] * prod_{(u, w) in E(g)} B[b(u), b(w)].

Disconnected patterns factor over their components.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .atlas import Atlas, SmallGraph, get_atlas
from .graph import GraphError, SbmSpec, assortative_sbm, heterogeneous_sbm


def _labelings(v: int, k: int) -> np.ndarray:
    return np.array(list(itertools.product(range(k), repeat=v)), dtype=np.int64).reshape(-1, v)


def _connected_moment(g: SmallGraph, B: np.ndarray, p: np.ndarray) -> float:
    lab = _labelings(g.v, len(p))
    w = np.prod(p[lab], axis=1)
    for u, x in g.edges:
        w = w * B[lab[:, u], lab[:, x]]
    return float(w.sum())


def sbm_moment(g: SmallGraph, B: np.ndarray, block_probs: np.ndarray, atlas: Atlas | None = None) -> float:
    """Exact graphon moment of atlas graph ``g`` under the SBM ``(B, p)``."""
    atlas = atlas or get_atlas()
    B = np.asarray(B, dtype=float)
    p = np.asarray(block_probs, dtype=float)
    out = 1.0
    for c in g.components:
        out *= _connected_moment(atlas[c], B, p)
    return out


def sbm_moments(spec: SbmSpec, ids, atlas: Atlas | None = None) -> dict[int, float]:
    atlas = atlas or get_atlas()
    cache: dict[int, float] = {}
    out = {}
    for gid in ids:
        val = 1.0
        for c in atlas[gid].components:
            if c not in cache:
                cache[c] = _connected_moment(atlas[c], spec.B, spec.block_probs)
            val *= cache[c]
        out[gid] = val
    return out


def upper_pairs(k: int) -> list[tuple[int, int]]:
    """The ``k(k+1)/2`` free entries of a symmetric ``k x k`` matrix."""
    return [(i, j) for i in range(k) for j in range(i, k)]


def _connected_jacobian(g: SmallGraph, B: np.ndarray, p: np.ndarray) -> np.ndarray:
    k = len(p)
    pairs = upper_pairs(k)
    col = {}
    for idx, (i, j) in enumerate(pairs):
        col[(i, j)] = col[(j, i)] = idx
    lab = _labelings(g.v, k)
    base = np.prod(p[lab], axis=1)
    factors = np.stack([B[lab[:, u], lab[:, x]] for u, x in g.edges], axis=1)
    e = factors.shape[1]
    # leave-one-out products via prefix/suffix products (no division by B)
    prefix = np.ones((len(lab), e + 1))
    suffix = np.ones((len(lab), e + 1))
    for t in range(e):
        prefix[:, t + 1] = prefix[:, t] * factors[:, t]
        suffix[:, e - t - 1] = suffix[:, e - t] * factors[:, e - t - 1]
    grad = np.zeros(len(pairs))
    for t, (u, x) in enumerate(g.edges):
        contrib = base * prefix[:, t] * suffix[:, t + 1]
        idx = np.array([col[(a, b)] for a, b in zip(lab[:, u], lab[:, x])])
        grad += np.bincount(idx, weights=contrib, minlength=len(pairs))
    return grad


def sbm_moment_jacobian(g: SmallGraph, B: np.ndarray, block_probs: np.ndarray,
                        atlas: Atlas | None = None) -> np.ndarray:
    """Gradient of :func:`sbm_moment` over the upper-triangular entries of
    ``B`` (order of :func:`upper_pairs`).  An off-diagonal entry moves both
    ``B[i, j]`` and ``B[j, i]``."""
    atlas = atlas or get_atlas()
    B = np.asarray(B, dtype=float)
    p = np.asarray(block_probs, dtype=float)
    comps = list(g.components)
    vals = [_connected_moment(atlas[c], B, p) for c in comps]
    grads = [_connected_jacobian(atlas[c], B, p) for c in comps]
    out = np.zeros(len(upper_pairs(len(p))))
    for i, gr in enumerate(grads):
        out += gr * np.prod([v for j, v in enumerate(vals) if j != i])
    return out


# ---------------------------------------------------------------------------
# Kronecker blend of the heterogeneous and assortative models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlendSpec:
    """Four-block SBM mixing degree heterogeneity and assortativity."""

    rho: float
    eps_h: float
    eps_a: float
    B0: np.ndarray

    @property
    def block_probs(self) -> np.ndarray:
        return np.full(4, 0.25)

    @property
    def sbm(self) -> SbmSpec:
        return SbmSpec(self.block_probs, self.B0)

    def to_json(self) -> dict:
        return {"rho": self.rho, "eps_h": self.eps_h, "eps_a": self.eps_a, "B0": self.B0.tolist()}


def blend_kronecker(rho: float, eps_h: float, eps_a: float) -> BlendSpec:
    """``B0 = rho * (H kron A)`` with ``H``, ``A`` the unit-density
    heterogeneous and assortative two-block matrices."""
    H = np.array([[1 + eps_h, 1.0], [1.0, 1 - eps_h]])
    A = np.array([[1 + eps_a, 1 - eps_a], [1 - eps_a, 1 + eps_a]])
    B0 = rho * np.kron(H, A)
    bad = np.argwhere((B0 < 0) | (B0 > 1))
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise GraphError(f"B0[{i},{j}] = {B0[i, j]:.6g} outside [0, 1] for "
                         f"rho={rho}, eps_h={eps_h}, eps_a={eps_a}")
    B0.setflags(write=False)
    return BlendSpec(rho, eps_h, eps_a, B0)


def perturbation_variances(B0: np.ndarray) -> np.ndarray:
    """Variance of each free entry of the symmetrized perturbation.

    Entries are drawn with variance ``B0_ij (1 - B0_ij)`` and then averaged
    with the transpose, which halves the variance off the diagonal.
    """
    pairs = upper_pairs(B0.shape[0])
    var = np.array([B0[i, j] * (1 - B0[i, j]) for i, j in pairs])
    off = np.array([i != j for i, j in pairs])
    return np.where(off, var / 2, var)


def draw_perturbation(B0: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One symmetric perturbation ``(D + D^T) / 2`` with
    ``D_ij ~ N(0, B0_ij (1 - B0_ij))``."""
    D = rng.normal(size=B0.shape) * np.sqrt(B0 * (1 - B0))
    return (D + D.T) / 2


__all__ = [
    "BlendSpec", "blend_kronecker", "draw_perturbation", "perturbation_variances",
    "sbm_moment", "sbm_moment_jacobian", "sbm_moments", "upper_pairs",
    "heterogeneous_sbm", "assortative_sbm",
]
