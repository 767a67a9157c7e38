"""Simple undirected graphs, edge-list ingestion, SBM sampling and node
subsampling."""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class EdgeListError(GraphError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` integer array with ``u < v`` in each row,
    sorted lexicographically and free of duplicates.
    """

    n: int
    edges: np.ndarray
    _adj: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 0:
            raise GraphError("node count must be nonnegative")
        if len(e):
            if np.any(e[:, 0] == e[:, 1]):
                raise GraphError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= self.n:
                raise GraphError(f"edge endpoint outside [0, {self.n})")
        e = np.sort(e, axis=1)
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise GraphError("duplicate edges are not allowed")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        return cls(n, np.array(list(edges), dtype=np.int64).reshape(-1, 2))

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj)
        u, v = np.nonzero(np.triu(adj, 1))
        return cls(adj.shape[0], np.stack([u, v], axis=1))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        u, v = np.triu_indices(n, 1)
        return cls(n, np.stack([u, v], axis=1))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def density(self) -> float:
        pairs = self.n * (self.n - 1) // 2
        return self.m / pairs if pairs else 0.0

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def adjacency(self, dtype=np.float64) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix (cached per dtype, read-only)."""
        key = np.dtype(dtype).str
        if key not in self._adj:
            a = np.zeros((self.n, self.n), dtype=dtype)
            a[self.edges[:, 0], self.edges[:, 1]] = 1
            a[self.edges[:, 1], self.edges[:, 0]] = 1
            a.setflags(write=False)
            self._adj[key] = a
        return self._adj[key]

    def induced(self, keep: np.ndarray) -> "Graph":
        """Induced subgraph on the nodes where ``keep`` is true, relabeled
        densely in increasing node order."""
        keep = np.asarray(keep, dtype=bool)
        relabel = np.cumsum(keep) - 1
        mask = keep[self.edges[:, 0]] & keep[self.edges[:, 1]]
        return Graph(int(keep.sum()), relabel[self.edges[mask]])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def to_json(self) -> dict:
        return {"n": self.n, "edges": self.edges.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "Graph":
        if "n" not in doc or "edges" not in doc:
            raise GraphError("graph JSON needs 'n' and 'edges'")
        return cls.from_edges(int(doc["n"]), doc["edges"])


class GraphSample:
    """Ordered, nonempty list of graphs sharing one node count."""

    def __init__(self, graphs: Iterable[Graph]):
        self.graphs = tuple(graphs)
        if not self.graphs:
            raise GraphError("a sample needs at least one graph")
        ns = {g.n for g in self.graphs}
        if len(ns) != 1:
            raise GraphError(f"graphs in a sample must share n, got {sorted(ns)}")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def s(self) -> int:
        return len(self.graphs)

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


# ---------------------------------------------------------------------------
# edge lists
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DropCounts:
    duplicates: int = 0
    self_loops: int = 0


def load_edge_list(source) -> tuple[Graph, DropCounts]:
    """Parse a whitespace-separated edge list.

    ``source`` may be a path, a text or binary stream, or ``bytes``.  Lines
    starting with ``#`` and blank lines are skipped.  Node tokens are
    arbitrary strings, relabeled ``0..n-1`` in order of first appearance.
    Self-loops and repeated edges are dropped and counted.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return load_edge_list(fh)
    if isinstance(source, bytes):
        source = io.BytesIO(source)

    labels: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    dups = loops = 0
    for lineno, raw in enumerate(source, 1):
        line = raw.decode() if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise EdgeListError(lineno, f"expected 2 node tokens, got {len(tokens)}")
        u = labels.setdefault(tokens[0], len(labels))
        v = labels.setdefault(tokens[1], len(labels))
        if u == v:
            loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            dups += 1
            continue
        seen.add(key)
        edges.append(key)
    return Graph.from_edges(len(labels), edges), DropCounts(dups, loops)


def load_graph(path) -> Graph:
    """Load a graph from ``.json`` (``{n, edges}``) or an edge-list file."""
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return Graph.from_json(json.load(fh))
    return load_edge_list(path)[0]


def save_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_json(), fh)


# ---------------------------------------------------------------------------
# stochastic block models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SbmSpec:
    """Block weights plus a symmetric connectivity matrix."""

    block_probs: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.block_probs, dtype=float).ravel()
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (len(p), len(p)):
            raise GraphError(f"B has shape {B.shape}, expected {(len(p), len(p))}")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise GraphError("block probabilities must be nonnegative and sum to 1")
        if not np.array_equal(B, B.T):
            raise GraphError("connectivity matrix must be symmetric")
        if np.any(B < 0) or np.any(B > 1):
            bad = tuple(int(i) for i in np.argwhere((B < 0) | (B > 1))[0])
            raise GraphError(f"connectivity entry {bad} = {B[bad]} outside [0, 1]")
        p.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "block_probs", p)
        object.__setattr__(self, "B", B)

    @property
    def k(self) -> int:
        return len(self.block_probs)

    def to_json(self) -> dict:
        return {"block_probs": self.block_probs.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "SbmSpec":
        return cls(np.array(doc["block_probs"]), np.array(doc["B"]))


def erdos_renyi(p: float) -> SbmSpec:
    return SbmSpec(np.array([1.0]), np.array([[p]]))


def heterogeneous_sbm(rho: float, eps_h: float) -> SbmSpec:
    """Two equal blocks, degree heterogeneity but no community structure."""
    B = rho * np.array([[1 + eps_h, 1.0], [1.0, 1 - eps_h]])
    return SbmSpec(np.array([0.5, 0.5]), B)


def assortative_sbm(rho: float, eps_a: float) -> SbmSpec:
    """Two equal communities with homogeneous expected degree."""
    B = rho * np.array([[1 + eps_a, 1 - eps_a], [1 - eps_a, 1 + eps_a]])
    return SbmSpec(np.array([0.5, 0.5]), B)


def _sbm_probabilities(spec: SbmSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    blocks = rng.choice(spec.k, size=n, p=spec.block_probs)
    return spec.B[np.ix_(blocks, blocks)]


def sample_sbm(spec: SbmSpec, n: int, rng: np.random.Generator) -> Graph:
    """Draw one graph: i.i.d. block labels, then independent edges."""
    if n < 1:
        raise GraphError("n must be at least 1")
    P = _sbm_probabilities(spec, n, rng)
    iu, ju = np.triu_indices(n, 1)
    hit = rng.random(len(iu)) < P[iu, ju]
    return Graph(n, np.stack([iu[hit], ju[hit]], axis=1))


def sample_sbm_adjacency(spec: SbmSpec, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent SBM draws as a ``(count, n, n)`` float array.

    Same law as :func:`sample_sbm`; meant for Monte Carlo batches.
    """
    blocks = rng.choice(spec.k, size=(count, n), p=spec.block_probs)
    P = spec.B[blocks[:, :, None], blocks[:, None, :]]
    U = rng.random((count, n, n))
    A = np.triu(U < P, 1)
    A = A | np.swapaxes(A, 1, 2)
    return A.astype(np.float64)


# ---------------------------------------------------------------------------
# subsampling of large networks
# ---------------------------------------------------------------------------

def subsample_nodes(G: Graph, target_n: float, rng: np.random.Generator) -> Graph:
    """Keep each node independently with probability ``target_n / n`` and
    return the induced subgraph."""
    if target_n <= 0:
        raise GraphError("target_n must be positive")
    if target_n > G.n:
        raise GraphError(f"target_n={target_n} exceeds the host size {G.n}")
    keep = rng.random(G.n) < target_n / G.n
    return G.induced(keep)


def match_edge_density(G: Graph, target_density: float, rng: np.random.Generator) -> Graph:
    """Delete uniformly random edges until the density is at most the target.

    Only thinning is supported; the node set is unchanged.
    """
    pairs = G.n * (G.n - 1) // 2
    if target_density < 0:
        raise GraphError("target density must be nonnegative")
    if target_density > G.density + 1e-12:
        raise GraphError(f"target density {target_density} exceeds current {G.density}; "
                         "adding edges is not supported")
    keep = min(G.m, math.floor(target_density * pairs))
    while keep + 1 <= G.m and (keep + 1) / pairs <= target_density:
        keep += 1
    while keep > 0 and keep / pairs > target_density:
        keep -= 1
    if keep == G.m:
        return G
    idx = np.sort(rng.choice(G.m, size=keep, replace=False))
    return Graph(G.n, G.edges[idx])
