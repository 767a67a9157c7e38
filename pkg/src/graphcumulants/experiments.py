"""Simulation protocols: coin-flip two-sample trials, ROC curves, null
calibration against chi-squared, and asymptotic relative efficiency grids."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import stats as sstats

from .atlas import Atlas, get_atlas
from .graph import Graph, GraphSample, SbmSpec, sample_sbm
from .models import (blend_kronecker, perturbation_variances, sbm_moment_jacobian, sbm_moments)
from .statistics import (KINDS, build_unbiased_map, cumulant_covariance, moment_covariance,
                         sample_counts)
from .twosample import chi2_cdf, pinv_symmetric, two_sample_test


class ExperimentError(ValueError):
    pass


Source = Union[SbmSpec, Graph]


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for ``(seed, key...)``; the same key always yields the same stream."""
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _source_json(src: Source) -> dict:
    if isinstance(src, SbmSpec):
        return {"sbm": src.to_json()}
    return {"host": {"n": src.n, "m": src.m}}


def draw_graph(src: Source, n: int, rng: np.random.Generator) -> Graph:
    """One graph on exactly ``n`` nodes from an SBM or from a host network.

    Host networks are sampled by a uniform node subset of size ``n`` so that
    every member of a sample has the same node count.
    """
    if isinstance(src, SbmSpec):
        return sample_sbm(src, n, rng)
    if n > src.n:
        raise ExperimentError(f"cannot draw {n} nodes from a host with {src.n}")
    keep = np.zeros(src.n, dtype=bool)
    keep[rng.choice(src.n, size=n, replace=False)] = True
    return src.induced(keep)


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialConfig:
    source_a: Source
    source_b: Source
    n: int
    s: int
    r: int = 3
    trials: int = 100
    seed: int = 0
    kinds: tuple[str, ...] = KINDS
    # "coin": the two-coin protocol; "null": every trial compares two samples of source_a
    protocol: str = "coin"

    def __post_init__(self):
        if self.r not in (1, 2, 3):
            raise ExperimentError("r must be 1, 2 or 3")
        if self.n < 2 or self.s < 1 or self.trials < 1:
            raise ExperimentError("n >= 2, s >= 1 and trials >= 1 are required")
        bad = set(self.kinds) - set(KINDS)
        if bad or not self.kinds:
            raise ExperimentError(f"unknown kinds {sorted(bad)}")
        if self.protocol not in ("coin", "null"):
            raise ExperimentError(f"unknown protocol {self.protocol!r}")

    def to_json(self) -> dict:
        return {"source_a": _source_json(self.source_a), "source_b": _source_json(self.source_b),
                "n": self.n, "s": self.s, "r": self.r, "trials": self.trials, "seed": self.seed,
                "kinds": list(self.kinds), "protocol": self.protocol}


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    src_a: str
    src_b: str
    different: bool
    statistic: dict[str, float]
    p_value: dict[str, float]
    rank: dict[str, int]
    degenerate: dict[str, bool]


@dataclass
class TrialBatch:
    config: TrialConfig
    records: list[TrialRecord] = field(default_factory=list)

    def scores(self, kind: str, drop_degenerate: bool = True):
        """``(statistics, truth labels, excluded count)`` for one kind."""
        keep = [t for t in self.records if not (drop_degenerate and t.degenerate[kind])]
        x = np.array([t.statistic[kind] for t in keep])
        y = np.array([t.different for t in keep], dtype=bool)
        return x, y, len(self.records) - len(keep)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(_header(self.config.to_json()))
        w = csv.writer(out, lineterminator="\n")
        kinds = self.config.kinds
        w.writerow(["trial", "src_a", "src_b", "different"]
                   + [f"{c}_{k}" for k in kinds for c in ("statistic", "p_value", "rank", "degenerate")])
        for t in self.records:
            row = [t.trial, t.src_a, t.src_b, int(t.different)]
            for k in kinds:
                row += [repr(t.statistic[k]), repr(t.p_value[k]), t.rank[k], int(t.degenerate[k])]
            w.writerow(row)
        return out.getvalue()


def _header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True) + "\n"


def _one_trial(config: TrialConfig, trial: int, atlas: Atlas | None = None) -> TrialRecord:
    atlas = atlas or get_atlas()
    rng = trial_rng(config.seed, trial)
    sources = {"A": config.source_a, "B": config.source_b}
    if config.protocol == "null":
        la, lb = "A", "A"
    elif rng.random() < 0.5:
        la, lb = "A", "B"
    else:
        la = lb = "A" if rng.random() < 0.5 else "B"
    sa = GraphSample([draw_graph(sources[la], config.n, rng) for _ in range(config.s)])
    sb = GraphSample([draw_graph(sources[lb], config.n, rng) for _ in range(config.s)])
    ca = sample_counts(sa, 2 * config.r, atlas)
    cb = sample_counts(sb, 2 * config.r, atlas)
    res = {k: two_sample_test(sa, sb, config.r, k, atlas, ca, cb) for k in config.kinds}
    return TrialRecord(trial, la, lb, la != lb,
                       {k: v.statistic for k, v in res.items()},
                       {k: v.p_value for k, v in res.items()},
                       {k: v.rank for k, v in res.items()},
                       {k: v.degenerate for k, v in res.items()})


def _trial_worker(args):
    return _one_trial(*args)


def run_trials(config: TrialConfig, threads: int = 1) -> TrialBatch:
    """Run ``config.trials`` independent trials.

    Each trial owns the stream ``(seed, trial)``, so results do not depend on
    ``threads`` or on scheduling.
    """
    jobs = [(config, t) for t in range(config.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            recs = list(ex.map(_trial_worker, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        atlas = get_atlas()
        recs = [_one_trial(c, t, atlas) for c, t in jobs]
    return TrialBatch(config, recs)


# ---------------------------------------------------------------------------
# ROC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocResult:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    excluded: int = 0

    def to_csv(self, header: dict | None = None) -> str:
        out = io.StringIO()
        if header is not None:
            out.write(_header(header))
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for th, f, t in zip(self.thresholds, self.fpr, self.tpr):
            w.writerow([repr(float(th)), repr(float(f)), repr(float(t))])
        return out.getvalue()


def roc_curve(scores: Sequence[float], positive: Sequence[bool], excluded: int = 0) -> RocResult:
    """ROC by sweeping a threshold over the distinct scores (higher score
    means "different").  Tied scores move both rates in one step, so the
    trapezoid credits ties with one half."""
    x = np.asarray(scores, dtype=float)
    y = np.asarray(positive, dtype=bool)
    if x.shape != y.shape or x.ndim != 1:
        raise ExperimentError("scores and labels must be 1-d and of equal length")
    npos, nneg = int(y.sum()), int((~y).sum())
    if npos == 0 or nneg == 0:
        raise ExperimentError(f"ROC needs both classes; got {npos} positive and {nneg} negative trials")
    if np.isnan(x).any():
        raise ExperimentError("scores contain NaN")
    order = np.argsort(-x, kind="stable")
    xs, ys = x[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(xs) != 0), len(xs) - 1]
    tp = np.cumsum(ys)[last]
    fp = np.cumsum(~ys)[last]
    tpr = np.r_[0.0, tp / npos]
    fpr = np.r_[0.0, fp / nneg]
    thr = np.r_[np.inf, xs[last]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocResult(fpr, tpr, thr, auc, excluded)


def roc_auc(batch: TrialBatch, kind: str) -> RocResult:
    """ROC of one test; degenerate trials are left out and counted."""
    x, y, excluded = batch.scores(kind)
    return roc_curve(x, y, excluded)


def auc_mann_whitney(x: np.ndarray, y: np.ndarray) -> float:
    """Same value as the trapezoidal AUC, via midranks."""
    ranks = sstats.rankdata(x)
    npos = int(y.sum())
    nneg = len(y) - npos
    return float((ranks[y].sum() - npos * (npos + 1) / 2) / (npos * nneg))


def auc_difference(batch: TrialBatch, boot: int = 1000, seed: int = 0,
                   kinds: tuple[str, str] = ("cumulant", "moment")) -> dict:
    """AUC difference between two tests on the trials valid for both, with
    a paired bootstrap standard error."""
    a, b = kinds
    keep = [t for t in batch.records if not (t.degenerate[a] or t.degenerate[b])]
    xa = np.array([t.statistic[a] for t in keep])
    xb = np.array([t.statistic[b] for t in keep])
    y = np.array([t.different for t in keep], dtype=bool)
    if y.all() or not y.any():
        raise ExperimentError("both truth classes are needed for the AUC difference")
    diff = auc_mann_whitney(xa, y) - auc_mann_whitney(xb, y)
    rng = trial_rng(seed, 0xB007)
    reps = []
    for _ in range(boot):
        idx = rng.integers(0, len(y), len(y))
        yy = y[idx]
        if yy.all() or not yy.any():
            continue
        reps.append(auc_mann_whitney(xa[idx], yy) - auc_mann_whitney(xb[idx], yy))
    return {"kinds": list(kinds), "trials": len(keep), "difference": diff,
            "se": float(np.std(reps, ddof=1)), "boot": len(reps)}


# ---------------------------------------------------------------------------
# chi-squared calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    dof: int
    trials: int
    ks: float
    exceed_95: float
    exceed_99: float
    bin_edges: np.ndarray
    counts: np.ndarray

    def summary(self) -> dict:
        return {"dof": self.dof, "trials": self.trials, "ks": self.ks,
                "exceed_95": self.exceed_95, "exceed_99": self.exceed_99}

    def to_csv(self, header: dict | None = None) -> str:
        out = io.StringIO()
        if header is not None:
            out.write(_header(header))
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["lo", "hi", "count", "expected"])
        expected = self.trials / len(self.counts)
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c), repr(expected)])
        return out.getvalue()


def chi2_calibration(statistics: Sequence[float], dof: int, bins: int = 50,
                     min_trials: int = 200) -> Calibration:
    """Compare null statistics with the chi-squared law of ``dof`` degrees of freedom."""
    x = np.sort(np.asarray(statistics, dtype=float))
    if len(x) < min_trials:
        raise ExperimentError(f"calibration needs at least {min_trials} null trials, got {len(x)}")
    F = np.array([chi2_cdf(v, dof) for v in x])
    k = len(x)
    ks = float(max((np.arange(1, k + 1) / k - F).max(), (F - np.arange(k) / k).max()))
    q = sstats.chi2.ppf([0.95, 0.99], dof)
    edges = sstats.chi2.ppf(np.linspace(0, 1, bins + 1), dof)
    counts = np.histogram(np.minimum(x, np.finfo(float).max), bins=np.r_[edges[:-1], np.inf])[0]
    return Calibration(dof, k, ks, float((x > q[0]).mean()), float((x > q[1]).mean()), edges, counts)


# ---------------------------------------------------------------------------
# asymptotic relative efficiency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PareCell:
    rho: float
    eps_h: float
    eps_a: float
    log_pare: float
    se: float
    lam_moment: np.ndarray
    lam_cumulant: np.ndarray


@dataclass
class PareReport:
    n: int
    draws: int
    seed: int
    cells: list[PareCell]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(_header({"n": self.n, "draws": self.draws, "seed": self.seed}))
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["rho", "eps_h", "eps_a", "log_pare", "se", "lam_moment", "lam_cumulant"])
        for c in self.cells:
            w.writerow([repr(c.rho), repr(c.eps_h), repr(c.eps_a), repr(c.log_pare), repr(c.se),
                        " ".join(repr(float(v)) for v in c.lam_moment),
                        " ".join(repr(float(v)) for v in c.lam_cumulant)])
        return out.getvalue()


def efficiency_matrices(rho: float, eps_h: float, eps_a: float, n: int, r: int = 3,
                        atlas: Atlas | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(M_moment, M_cumulant)``: local Fisher-type matrices of the two
    statistics over the free entries of the connectivity matrix, scaled by
    the perturbation amplitudes."""
    atlas = atlas or get_atlas()
    spec = blend_kronecker(rho, eps_h, eps_a)
    B0, p = spec.B0, spec.block_probs
    mu = sbm_moments(spec.sbm, atlas.basis(2 * r), atlas)
    basis = atlas.basis(r, connected=True)
    umap = build_unbiased_map(r, atlas)
    J_full = np.array([sbm_moment_jacobian(atlas[g], B0, p, atlas) for g in umap.cols])
    col = {g: i for i, g in enumerate(umap.cols)}
    J_mu = J_full[[col[g] for g in basis]]
    J_kappa = umap.L.astype(float) @ J_full
    Dh = np.sqrt(perturbation_variances(B0))
    out = []
    for J, S in ((J_mu, moment_covariance(mu, n, basis, atlas).values),
                 (J_kappa, cumulant_covariance(mu, n, r, atlas).values)):
        inv, _ = pinv_symmetric(np.asarray(S, dtype=float))
        M = (Dh[:, None] * (J.T @ inv @ J)) * Dh[None, :]
        out.append((M + M.T) / 2)
    return out[0], out[1]


def log_pare(lam_moment: np.ndarray, lam_cumulant: np.ndarray, draws: int,
             rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean and standard error of
    ``log(sum lam_k xi^2) - log(sum lam_m xi^2)`` with one shared ``xi``."""
    lm = np.clip(lam_moment, 0, None)
    lk = np.clip(lam_cumulant, 0, None)
    if not lm.any() or not lk.any():
        raise ExperimentError("efficiency matrix is zero")
    xi2 = rng.standard_normal((draws, len(lm))) ** 2
    d = np.log(xi2 @ lk) - np.log(xi2 @ lm)
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(draws))


def pare_grid(rho: Sequence[float], eps_h: Sequence[float], eps_a: Sequence[float], n: int = 256,
              draws: int = 10_000, seed: int = 0, atlas: Atlas | None = None) -> PareReport:
    atlas = atlas or get_atlas()
    cells = []
    for i, (a, b, c) in enumerate((a, b, c) for a in rho for b in eps_h for c in eps_a):
        Mm, Mk = efficiency_matrices(a, b, c, n, 3, atlas)
        lm, lk = np.linalg.eigvalsh(Mm), np.linalg.eigvalsh(Mk)
        est, se = log_pare(lm, lk, draws, trial_rng(seed, i))
        cells.append(PareCell(float(a), float(b), float(c), est, se, lm, lk))
    return PareReport(n, draws, seed, cells)


def dump_json(obj) -> str:
    """Deterministic JSON (sorted keys, arrays as lists)."""
    def enc(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        raise TypeError(type(o).__name__)
    return json.dumps(obj, indent=1, sort_keys=True, default=enc) + "\n"


__all__ = [
    "Calibration", "ExperimentError", "PareCell", "PareReport", "RocResult", "TrialBatch",
    "TrialConfig", "TrialRecord", "auc_difference", "auc_mann_whitney", "chi2_calibration",
    "draw_graph", "dump_json", "efficiency_matrices", "log_pare", "pare_grid", "roc_auc",
    "roc_curve", "run_trials", "trial_rng",
]
