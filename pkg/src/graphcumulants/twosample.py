"""Squared Mahalanobis two-sample statistic with chi-squared p-values."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .atlas import Atlas, get_atlas
from .counting import StatVector
from .graph import GraphSample
from .statistics import (CovMatrix, KINDS, estimate_cumulants, estimate_moments, sample_counts,
                         sample_covariance)


class TestError(ValueError):
    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class TestReport:
    kind: str
    r: int | None
    dof: int
    rank: int
    degenerate: bool
    statistic: float
    p_value: float
    n: int | None = None
    s: int | None = None

    __test__ = False  # not a pytest class

    def to_json(self) -> dict:
        return asdict(self)


def chi2_cdf(x: float, k: int) -> float:
    """CDF of the chi-squared distribution with ``k`` degrees of freedom
    (regularized lower incomplete gamma ``P(k/2, x/2)``)."""
    if k < 1:
        raise TestError("degrees of freedom must be at least 1")
    if x < 0 or np.isnan(x):
        raise TestError(f"chi2_cdf needs x >= 0, got {x}")
    if np.isinf(x):
        return 1.0
    return float(special.gammainc(k / 2, x / 2))


def chi2_sf(x: float, k: int) -> float:
    """Upper tail ``1 - chi2_cdf(x, k)`` without cancellation."""
    if k < 1:
        raise TestError("degrees of freedom must be at least 1")
    if x < 0 or np.isnan(x):
        raise TestError(f"chi2_sf needs x >= 0, got {x}")
    if np.isinf(x):
        return 0.0
    return float(special.gammaincc(k / 2, x / 2))


def pinv_symmetric(S: np.ndarray, dof: int | None = None) -> tuple[np.ndarray, int]:
    """Pseudoinverse of a symmetric matrix and its numerical rank.

    Eigenvalues at or below ``dof * lambda_max * 1e-12`` are discarded.
    """
    dof = S.shape[0] if dof is None else dof
    lam, vec = np.linalg.eigh(S)
    top = max(float(lam.max(initial=0.0)), 0.0)
    keep = lam > dof * top * 1e-12
    if top == 0.0:
        keep[:] = False
    inv = (vec[:, keep] / lam[keep]) @ vec[:, keep].T
    return inv, int(keep.sum())


def _check_symmetric(S: np.ndarray, name: str):
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise TestError(f"{name} is not square")
    scale = max(float(np.abs(S).max(initial=0.0)), 1.0)
    if np.abs(S - S.T).max(initial=0.0) > 1e-9 * scale:
        raise TestError(f"{name} is not symmetric")


def mahalanobis_sq(x_a, x_b, cov_a, cov_b, kind: str | None = None, r: int | None = None) -> TestReport:
    """``d^2 = (x_a - x_b)^T (cov_a + cov_b)^+ (x_a - x_b)``.

    Accepts :class:`StatVector` / :class:`CovMatrix` (bases are checked) or
    plain arrays.
    """
    meta = {}
    if isinstance(x_a, StatVector):
        bases = {x_a.basis, getattr(x_b, "basis", None), getattr(cov_a, "basis", None),
                 getattr(cov_b, "basis", None)}
        if len(bases) != 1:
            raise TestError("statistic vectors and covariances use different bases")
        kind = kind or x_a.kind
        meta = {"n": x_a.n, "s": x_a.s}
    va = np.asarray(getattr(x_a, "values", x_a), dtype=float)
    vb = np.asarray(getattr(x_b, "values", x_b), dtype=float)
    Sa = np.asarray(getattr(cov_a, "values", cov_a), dtype=float)
    Sb = np.asarray(getattr(cov_b, "values", cov_b), dtype=float)
    if va.shape != vb.shape or Sa.shape != (len(va), len(va)) or Sb.shape != Sa.shape:
        raise TestError("shape mismatch between statistics and covariances")
    _check_symmetric(Sa, "cov_a")
    _check_symmetric(Sb, "cov_b")
    pooled = Sa + Sb
    pooled = (pooled + pooled.T) / 2
    dof = len(va)
    inv, rank = pinv_symmetric(pooled, dof)
    diff = va - vb
    stat = max(float(diff @ inv @ diff), 0.0)
    return TestReport(kind=kind or "moment", r=r, dof=dof, rank=rank, degenerate=rank < dof,
                      statistic=stat, p_value=chi2_sf(stat, dof), **meta)


def sample_statistics(sample: GraphSample, r: int, kind: str, atlas: Atlas | None = None,
                      counts: list[dict[int, int]] | None = None) -> tuple[StatVector, CovMatrix]:
    """Estimated statistic vector and covariance of its sample mean."""
    atlas = atlas or get_atlas()
    if kind not in KINDS:
        raise TestError(f"kind must be one of {KINDS}")
    if counts is None:
        counts = sample_counts(sample, 2 * r, atlas)
    if kind == "moment":
        x = estimate_moments(sample, atlas.basis(r, connected=True), atlas, counts)
    else:
        x = estimate_cumulants(sample, r, atlas, counts)
    return x, sample_covariance(sample, r, kind, atlas, counts)


def two_sample_test(sample_a: GraphSample, sample_b: GraphSample, r: int, kind: str,
                    atlas: Atlas | None = None, counts_a=None, counts_b=None) -> TestReport:
    """Compare two samples of graphs with the order-``r`` moment or cumulant
    statistic.  A rank-deficient pooled covariance is flagged, not raised."""
    atlas = atlas or get_atlas()
    if sample_a.n != sample_b.n:
        raise TestError("both samples must have the same node count")
    xa, ca = sample_statistics(sample_a, r, kind, atlas, counts_a)
    xb, cb = sample_statistics(sample_b, r, kind, atlas, counts_b)
    rep = mahalanobis_sq(xa, xb, ca, cb, kind=kind, r=r)
    s = sample_a.s if sample_a.s == sample_b.s else None
    return TestReport(**{**rep.to_json(), "n": sample_a.n, "s": s})
