"""Moments, cumulants, unbiased estimators and their covariances.

Graph cumulants are defined through the edge-partition expansion of moments

    mu_g = sum over partitions pi of E(g) of prod_{p in pi} kappa_{g_p}

where ``g_p`` is the subgraph spanned by the edges in block ``p``.  The
unbiased single-graph estimator replaces every product of moments in the
inverted expansion by the moment of the disjoint union.

Covariances are computed analytically for a given node count from moments of
up to twice the order of the statistics, using the gluing coefficients of
the atlas.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .atlas import Atlas, get_atlas
from .counting import StatVector, falling_factorial, inj_counts_batch
from .graph import GraphSample

KINDS = ("moment", "cumulant")


class StatisticsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Covariance of a statistic vector, tagged with where it came from."""

    basis: tuple[int, ...]
    values: np.ndarray
    n: int
    s: int
    kind: str

    def to_json(self, atlas: Atlas | None = None) -> dict:
        atlas = atlas or get_atlas()
        return {
            "kind": self.kind, "n": self.n, "s": self.s,
            "basis": [atlas[g].name for g in self.basis],
            "values": [[float(x) for x in row] for row in self.values],
        }


# ---------------------------------------------------------------------------
# moment <-> cumulant transforms
# ---------------------------------------------------------------------------

def _require(values: Mapping[int, float], ids, what: str, atlas: Atlas):
    missing = [atlas[g].name for g in ids if g not in values]
    if missing:
        raise StatisticsError(f"missing {what} for {', '.join(missing[:5])}"
                              + (" ..." if len(missing) > 5 else ""))


def moments_to_cumulants_dict(mu: Mapping[int, float], r: int, atlas: Atlas | None = None) -> dict[int, float]:
    """Cumulants of every atlas graph with at most ``r`` edges.

    Solves the partition expansion for the single-block term, in order of
    increasing edge count.
    """
    atlas = atlas or get_atlas()
    ids = atlas.basis(r)
    _require(mu, ids, "moments", atlas)
    kappa: dict[int, float] = {}
    for gid in ids:
        acc = mu[gid]
        for parts, mult in atlas.edge_partitions(gid):
            if len(parts) == 1:
                continue
            term = mult
            for p in parts:
                term *= kappa[p]
            acc -= term
        kappa[gid] = acc
    return kappa


def cumulants_to_moments_dict(kappa: Mapping[int, float], r: int, atlas: Atlas | None = None) -> dict[int, float]:
    """Moments of every atlas graph with at most ``r`` edges from cumulants.

    Cumulants missing from ``kappa`` are allowed only for disconnected graphs
    and are then taken to be zero.
    """
    atlas = atlas or get_atlas()
    ids = atlas.basis(r)
    _require(kappa, [g for g in ids if atlas[g].connected], "cumulants", atlas)
    mu: dict[int, float] = {}
    for gid in ids:
        acc = 0
        for parts, mult in atlas.edge_partitions(gid):
            term = mult
            for p in parts:
                k = kappa.get(p, 0)
                if not k:
                    term = 0
                    break
                term *= k
            acc += term
        mu[gid] = acc
    return mu


def moments_to_cumulants(mu: StatVector, r: int, atlas: Atlas | None = None) -> StatVector:
    """Cumulants over the connected basis of order ``r``."""
    atlas = atlas or get_atlas()
    kappa = moments_to_cumulants_dict(mu.as_dict(), r, atlas)
    basis = tuple(atlas.basis(r, connected=True))
    return StatVector(basis, np.array([kappa[g] for g in basis]), mu.n, mu.s, "cumulant")


def cumulants_to_moments(kappa: StatVector, r: int, atlas: Atlas | None = None) -> StatVector:
    """Moments over the full basis of order ``r`` (inverse transform)."""
    atlas = atlas or get_atlas()
    mu = cumulants_to_moments_dict(kappa.as_dict(), r, atlas)
    basis = tuple(atlas.basis(r))
    return StatVector(basis, np.array([mu[g] for g in basis]), kappa.n, kappa.s, "moment")


# ---------------------------------------------------------------------------
# symbolic expansion and the unbiased estimator
# ---------------------------------------------------------------------------

Poly = dict[tuple[int, ...], int]


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Counter = Counter()
    for ma, ca in a.items():
        for mb, cb in b.items():
            out[tuple(sorted(ma + mb))] += ca * cb
    return {m: c for m, c in out.items() if c}


def cumulant_polynomial(gid: int, atlas: Atlas | None = None) -> Poly:
    """The cumulant of ``gid`` as an integer polynomial in moments.

    Keys are sorted tuples of atlas ids (a monomial), values coefficients.
    """
    atlas = atlas or get_atlas()
    key = ("cumulant_poly", gid)
    if key not in atlas.memo:
        poly: Counter = Counter({(gid,): 1})
        for parts, mult in atlas.edge_partitions(gid):
            if len(parts) == 1:
                continue
            term: Poly = {(): mult}
            for p in parts:
                term = _poly_mul(term, cumulant_polynomial(p, atlas))
            for m, c in term.items():
                poly[m] -= c
        atlas.memo[key] = {m: c for m, c in sorted(poly.items()) if c}
    return dict(atlas.memo[key])


def disjoint_union(ids: Sequence[int], atlas: Atlas | None = None) -> int:
    atlas = atlas or get_atlas()
    edges = []
    offset = 0
    for g in ids:
        edges.extend((u + offset, w + offset) for u, w in atlas[g].edges)
        offset += atlas[g].v
    return atlas.id_of(edges)


@dataclass(frozen=True, eq=False)
class UnbiasedMap:
    """Integer matrix taking full-basis moments of one graph to unbiased
    estimates of the connected cumulants."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    L: np.ndarray

    def row(self, gid: int) -> dict[int, int]:
        i = self.rows.index(gid)
        return {c: int(x) for c, x in zip(self.cols, self.L[i]) if x}


def build_unbiased_map(r: int, atlas: Atlas | None = None) -> UnbiasedMap:
    """Unbiased estimator map for order ``r``: rows are connected graphs,
    columns all graphs with at most ``r`` edges."""
    atlas = atlas or get_atlas()
    key = ("unbiased_map", r)
    if key not in atlas.memo:
        rows = tuple(atlas.basis(r, connected=True))
        cols = tuple(atlas.basis(r))
        col = {g: j for j, g in enumerate(cols)}
        L = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for i, g in enumerate(rows):
            for mono, c in cumulant_polynomial(g, atlas).items():
                L[i, col[disjoint_union(mono, atlas)]] += c
        L.setflags(write=False)
        atlas.memo[key] = UnbiasedMap(rows, cols, L)
    return atlas.memo[key]


# ---------------------------------------------------------------------------
# per-graph census
# ---------------------------------------------------------------------------

def census_ids(order: int, n: int, atlas: Atlas | None = None) -> list[int]:
    """Atlas graphs with at most ``order`` edges that fit in ``n`` nodes."""
    atlas = atlas or get_atlas()
    return [g for g in atlas.basis(order) if atlas[g].v <= n]


def sample_counts(sample: GraphSample, order: int, atlas: Atlas | None = None) -> list[dict[int, int]]:
    """Exact injective counts of all graphs up to ``order`` edges, per graph."""
    atlas = atlas or get_atlas()
    ids = census_ids(order, sample.n, atlas)
    adjs = np.stack([G.adjacency() for G in sample])
    res = inj_counts_batch(adjs, ids, atlas)
    return [{g: int(res[g][i]) for g in ids} for i in range(sample.s)]


def _densities(counts: Mapping[int, int], n: int, atlas: Atlas) -> dict[int, float]:
    return {g: c / falling_factorial(n, atlas[g].v) for g, c in counts.items()}


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def estimate_moments(sample: GraphSample, basis: Sequence[int], atlas: Atlas | None = None,
                     counts: list[dict[int, int]] | None = None) -> StatVector:
    """Average of the per-graph moments."""
    atlas = atlas or get_atlas()
    basis = tuple(basis)
    if counts is None:
        order = max(atlas[g].e for g in basis)
        counts = sample_counts(sample, order, atlas)
    per = np.array([[_densities(c, sample.n, atlas)[g] for g in basis] for c in counts])
    return StatVector(basis, per.mean(axis=0), sample.n, sample.s, "moment")


def unbiased_cumulants(counts: Mapping[int, int], n: int, r: int, atlas: Atlas | None = None) -> dict[int, float]:
    """Unbiased cumulant estimates of one graph from its counts."""
    atlas = atlas or get_atlas()
    umap = build_unbiased_map(r, atlas)
    mu = _densities({g: counts[g] for g in umap.cols if atlas[g].v <= n}, n, atlas)
    if len(mu) != len(umap.cols):
        raise StatisticsError(f"n={n} is too small for order-{r} unbiased cumulants")
    vec = np.array([mu[g] for g in umap.cols])
    return dict(zip(umap.rows, (umap.L @ vec).tolist()))


def estimate_cumulants(sample: GraphSample, r: int, atlas: Atlas | None = None,
                       counts: list[dict[int, int]] | None = None) -> StatVector:
    """Average of the per-graph unbiased cumulant estimates."""
    atlas = atlas or get_atlas()
    if counts is None:
        counts = sample_counts(sample, r, atlas)
    basis = tuple(atlas.basis(r, connected=True))
    per = [unbiased_cumulants(c, sample.n, r, atlas) for c in counts]
    vals = np.array([[k[g] for g in basis] for k in per]).mean(axis=0)
    return StatVector(basis, vals, sample.n, sample.s, "cumulant")


# ---------------------------------------------------------------------------
# covariances
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _placement_ratio(n: int, vh: int, va: int, vb: int) -> Fraction:
    return Fraction(falling_factorial(n, vh), falling_factorial(n, va) * falling_factorial(n, vb))


def moment_covariance_matrix(mu2r: Mapping[int, object], n: int, basis: Sequence[int],
                             atlas: Atlas | None = None) -> np.ndarray:
    """Covariance of single-graph moments on ``n`` nodes.

    ``mu2r`` holds moments of the generating distribution for every graph
    that arises by gluing two basis graphs (graphs with more than ``n``
    nodes may be omitted; they cannot occur).  Exact when the moments are
    given as :class:`fractions.Fraction`.
    """
    atlas = atlas or get_atlas()
    basis = list(basis)
    for g in basis:
        if atlas[g].v > n:
            raise StatisticsError(f"n={n} is smaller than {atlas[g].name}")
    exact = all(isinstance(mu2r.get(g), (Fraction, int)) for g in basis)
    k = len(basis)
    out = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            a, b = basis[i], basis[j]
            va, vb = atlas[a].v, atlas[b].v
            second = 0
            for h, beta in atlas.gluing(a, b).items():
                vh = atlas[h].v
                if vh > n:
                    continue
                if h not in mu2r:
                    raise StatisticsError(f"moment of {atlas[h].name} needed for the covariance")
                ratio = _placement_ratio(n, vh, va, vb)
                second += beta * mu2r[h] * (ratio if exact else float(ratio))
            out[i][j] = out[j][i] = second - mu2r[a] * mu2r[b]
    return np.array([[float(x) for x in row] for row in out])


def moment_covariance(mu2r: Mapping[int, object], n: int, basis: Sequence[int],
                      atlas: Atlas | None = None) -> CovMatrix:
    vals = moment_covariance_matrix(mu2r, n, basis, atlas)
    return CovMatrix(tuple(basis), vals, n, 1, "moment")


def cumulant_covariance(mu2r: Mapping[int, object], n: int, r: int, atlas: Atlas | None = None) -> CovMatrix:
    """Covariance of single-graph unbiased cumulants: ``L Sigma L^T`` with
    ``Sigma`` the full-basis moment covariance."""
    atlas = atlas or get_atlas()
    umap = build_unbiased_map(r, atlas)
    full = moment_covariance_matrix(mu2r, n, umap.cols, atlas)
    L = umap.L.astype(float)
    vals = L @ full @ L.T
    return CovMatrix(umap.rows, (vals + vals.T) / 2, n, 1, "cumulant")


def check_psd(values: np.ndarray, rel_tol: float = 1e-9, strict: bool = True) -> np.ndarray:
    """Clamp negative eigenvalues to zero.

    With ``strict``, eigenvalues below ``-rel_tol * lambda_max`` raise
    instead of being clamped.
    """
    values = (values + values.T) / 2
    lam, vec = np.linalg.eigh(values)
    low, top = lam.min(), max(lam.max(), 0.0)
    if low >= 0:
        return values
    if strict and low < -rel_tol * top:
        raise StatisticsError(f"covariance has eigenvalue {low:.3g} (largest {top:.3g})")
    return (vec * np.clip(lam, 0, None)) @ vec.T


def inferred_moments(counts: list[dict[int, int]], n: int, order: int, kind: str,
                     atlas: Atlas | None = None) -> dict[int, object]:
    """Moments of the distribution a sample is taken to come from.

    ``moment``: the sample averages of the per-graph moments, kept as exact
    fractions.  ``cumulant``: the averaged unbiased connected cumulants up to
    ``order`` with disconnected cumulants set to zero, pushed back through
    the partition expansion.
    """
    atlas = atlas or get_atlas()
    s = len(counts)
    if kind == "moment":
        ids = census_ids(order, n, atlas)
        return {g: Fraction(sum(c[g] for c in counts), s * falling_factorial(n, atlas[g].v))
                for g in ids}
    if kind == "cumulant":
        per = [unbiased_cumulants(c, n, order, atlas) for c in counts]
        kappa = {g: sum(k[g] for k in per) / s for g in per[0]}
        return cumulants_to_moments_dict(kappa, order, atlas)
    raise StatisticsError(f"unknown kind {kind!r}")


def sample_covariance(sample: GraphSample, r: int, kind: str, atlas: Atlas | None = None,
                      counts: list[dict[int, int]] | None = None) -> CovMatrix:
    """Estimated covariance of the sample-mean statistic over the connected
    basis of order ``r``."""
    atlas = atlas or get_atlas()
    if counts is None:
        counts = sample_counts(sample, 2 * r, atlas)
    mu2r = inferred_moments(counts, sample.n, 2 * r, kind, atlas)
    if kind == "moment":
        basis = atlas.basis(r, connected=True)
        vals = moment_covariance_matrix(mu2r, sample.n, basis, atlas)
    else:
        cov = cumulant_covariance(mu2r, sample.n, r, atlas)
        basis, vals = cov.basis, cov.values
    # moments inferred from estimated cumulants need not be realizable at
    # finite n, so the cumulant covariance can be slightly indefinite
    vals = check_psd(vals, strict=kind == "moment") / sample.s
    return CovMatrix(tuple(basis), vals, sample.n, sample.s, kind)


def to_json(obj, atlas: Atlas | None = None) -> str:
    return json.dumps(obj.to_json(atlas), indent=1)
