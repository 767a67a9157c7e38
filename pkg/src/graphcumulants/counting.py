"""Exact injective homomorphism counts of atlas graphs in host graphs.

Connected patterns go through homomorphism counts (variable elimination over
the pattern, i.e. dynamic programming over the tree decomposition given by
the elimination order, with dense matrix contractions over host nodes) and a
Moebius inversion over vertex partitions.  Disconnected patterns are derived
from connected ones through the gluing identity.

All functions take host graphs in batches of equal node count: a
``(batch, n, n)`` adjacency stack.  Counts come back as integer arrays
(``int64`` where the range is provably safe, Python ints otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .atlas import Atlas, SmallGraph, get_atlas
from .graph import Graph


class CountingError(ValueError):
    pass


def falling_factorial(n: int, k: int) -> int:
    if k > n:
        return 0
    return math.perm(n, k)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << 12)], dtype=np.int64)


def inj_count_bruteforce(g: SmallGraph | Sequence[tuple[int, int]], G: Graph) -> int:
    """Count injective node maps of ``g`` into ``G`` that send edges to edges.

    Enumerates partial maps level by level (vectorized), checking each new
    node against its already-placed neighbours; the last level is counted
    with a popcount instead of being expanded.  Hosts are limited to 12
    nodes.
    """
    edges = g.edges if isinstance(g, SmallGraph) else tuple(g)
    if G.n > 12:
        raise CountingError("brute-force oracle is limited to hosts with n <= 12")
    v = 1 + max(max(e) for e in edges)
    if v > G.n:
        return 0
    nbrs = [set() for _ in range(v)]
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    # connected-first ordering keeps the frontier small
    order = [max(range(v), key=lambda x: (len(nbrs[x]), -x))]
    while len(order) < v:
        rest = [x for x in range(v) if x not in order]
        order.append(max(rest, key=lambda x: (len(nbrs[x] & set(order)), len(nbrs[x]), -x)))
    pos = {x: i for i, x in enumerate(order)}
    back = [[pos[y] for y in nbrs[x] if pos[y] < pos[x]] for x in order]

    masks = np.zeros(G.n, dtype=np.int64)
    for a, b in G.edges:
        masks[a] |= 1 << int(b)
        masks[b] |= 1 << int(a)
    full = (1 << G.n) - 1
    bits = np.arange(G.n, dtype=np.int64)

    placed = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1, dtype=np.int64)
    for k in range(v):
        cand = ~used & full
        for j in back[k]:
            cand &= masks[placed[:, j]]
        if k == v - 1:
            return int(_POPCOUNT[cand].sum())
        rows, nodes = np.nonzero((cand[:, None] >> bits) & 1)
        placed = np.concatenate([placed[rows], nodes[:, None]], axis=1)
        used = used[rows] | (np.int64(1) << nodes)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# homomorphism counts by variable elimination
# ---------------------------------------------------------------------------

ADJ = ("A",)
ONE = ("1",)
K4 = ("k4",)


def _t(m):
    if m == ADJ:
        return ADJ
    if m[0] == "T":
        return m[1]
    if m[0] == "mm":
        return ("mm", _t(m[3]), m[2], _t(m[1]))
    if m[0] == "mh":
        return _mh(_t(m[1]), _t(m[2]))
    return ("T", m)


def _mh(x, y):
    return ("mh",) + tuple(sorted((x, y), key=repr))


def _vh(x, y):
    if x == ONE:
        return y
    if y == ONE:
        return x
    return ("vh",) + tuple(sorted((x, y), key=repr))


def hom_plan(atlas: Atlas, gid: int):
    """Symbolic expression whose entries sum to ``hom(g, G)``.

    Built from the atlas elimination order.  Each pattern node carries a
    weight vector over host nodes and each pattern edge a host-by-host
    matrix.  Eliminating a node of degree one folds a matrix-vector product
    into its neighbour's weight; degree two produces
    ``M1 diag(w) M2`` on the edge between its neighbours (Hadamard-merged
    with an existing edge).  The only width-3 pattern with at most six
    edges is K4, which gets its own contraction.
    """
    g = atlas[gid]
    if not g.connected:
        raise CountingError("homomorphism plans are built for connected patterns only")
    order = atlas.elimination_order(gid)
    weight = {x: ONE for x in range(g.v)}
    mats = {e: ADJ for e in g.edges}
    adj = {x: set() for x in range(g.v)}
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)

    def get(u, w):
        return mats[(u, w)] if u < w else _t(mats[(w, u)])

    for step, x in enumerate(order):
        nb = sorted(adj[x])
        if step == g.v - 1:
            return weight[x]
        if len(nb) == 1:
            (u,) = nb
            weight[u] = _vh(weight[u], ("mv", get(u, x), weight[x]))
        elif len(nb) == 2:
            u, w = nb
            new = ("mm", get(u, x), weight[x], get(x, w))
            mats[(u, w)] = _mh(mats[(u, w)], new) if (u, w) in mats else new
        else:
            if g.v == 4 and g.e == 6:
                return K4
            raise CountingError(f"pattern {g.name} needs width {len(nb)}")
        for y in nb:
            adj[y].discard(x)
            mats.pop((min(x, y), max(x, y)), None)
            adj[y].update(set(nb) - {y})
        adj[x] = set()
    raise AssertionError("unreachable")


class _Evaluator:
    def __init__(self, A: np.ndarray):
        self.A = A
        self.cache: dict = {}

    def __call__(self, expr):
        if expr in self.cache:
            return self.cache[expr]
        op = expr[0]
        A = self.A
        if op == "A":
            val = A
        elif op == "1":
            val = np.ones(A.shape[:-1], dtype=A.dtype)
        elif op == "T":
            val = np.swapaxes(self(expr[1]), -1, -2)
        elif op == "mv":
            val = (self(expr[1]) @ self(expr[2])[..., None])[..., 0]
        elif op == "mm":
            M1, w, M2 = self(expr[1]), self(expr[2]), self(expr[3])
            val = M1 @ (w[..., :, None] * M2) if expr[2] != ONE else M1 @ M2
        elif op in ("mh", "vh"):
            val = self(expr[1]) * self(expr[2])
        elif op == "k4":
            val = _k4_rows(A)
        else:
            raise AssertionError(op)
        self.cache[expr] = val
        return val


def _k4_rows(A: np.ndarray) -> np.ndarray:
    # for each ordered adjacent pair (a, b): number of ordered adjacent pairs
    # (c, d) inside the common neighbourhood of a and b, placed on row a
    out = np.zeros(A.shape[:-1], dtype=np.int64)
    n = A.shape[-1]
    work = np.float32 if n * n < 2 ** 24 else np.float64
    for i in range(A.shape[0]):
        Ai = A[i].astype(work)
        a, b = np.nonzero(np.triu(Ai, 1))
        if len(a) == 0:
            continue
        P = Ai[a] * Ai[b]
        per_edge = np.rint(((P @ Ai) * P).sum(axis=1)).astype(np.int64)
        out[i] = 2 * np.bincount(a, weights=per_edge, minlength=n).astype(np.int64)
    return out


def _work_dtype(n: int, vmax: int):
    if n ** (vmax - 1) < 2 ** 53:
        return np.float64
    if n ** (vmax - 1) < 2 ** 62:
        return np.int64
    raise CountingError(f"host with n={n} exceeds the supported exact range")


def _to_exact(x: np.ndarray) -> np.ndarray:
    if x.dtype.kind == "f":
        return np.rint(x).astype(np.int64)
    return x.astype(np.int64)


def _sum_exact(vec: np.ndarray, bound: int) -> np.ndarray:
    ints = _to_exact(vec)
    if bound < 2 ** 62:
        return ints.sum(axis=-1)
    return ints.astype(object).sum(axis=-1)


def hom_counts_batch(adjs: np.ndarray, gids: Iterable[int], atlas: Atlas | None = None) -> dict[int, np.ndarray]:
    """Homomorphism counts of connected atlas graphs for a batch of hosts."""
    atlas = atlas or get_atlas()
    adjs = np.asarray(adjs)
    if adjs.ndim == 2:
        adjs = adjs[None]
    gids = list(gids)
    n = adjs.shape[-1]
    vmax = max((atlas[g].v for g in gids), default=2)
    ev = _Evaluator(adjs.astype(_work_dtype(n, vmax)))
    out = {}
    for gid in gids:
        vec = ev(hom_plan(atlas, gid))
        out[gid] = _sum_exact(vec, n ** atlas[gid].v)
    return out


def hom_count(g: SmallGraph, G: Graph, atlas: Atlas | None = None) -> int:
    """Number of (not necessarily injective) homomorphisms ``g -> G``.

    Disconnected patterns multiply over their components.
    """
    atlas = atlas or get_atlas()
    res = hom_counts_batch(G.adjacency(), set(g.components), atlas)
    total = 1
    for cid in g.components:
        total *= int(res[cid][0])
    return total


def inj_from_hom(g: SmallGraph, hom_values: dict[int, int], atlas: Atlas | None = None) -> int:
    """Injective count of connected ``g`` from homomorphism counts of its
    loop-free quotients (Moebius inversion on the vertex-partition lattice)."""
    atlas = atlas or get_atlas()
    return sum(w * hom_values[h] for h, w in atlas.quotients(g.id).items())


# ---------------------------------------------------------------------------
# injective counts for arbitrary atlas graphs
# ---------------------------------------------------------------------------

def _split(atlas: Atlas, gid: int) -> tuple[int, int]:
    """Split disconnected ``gid`` into (largest component, remainder)."""
    g = atlas[gid]
    first = max(g.components, key=lambda c: (atlas[c].v, atlas[c].e, c))
    rest = list(g.components)
    rest.remove(first)
    # rebuild the remainder as an explicit edge set
    edges = []
    offset = 0
    for c in rest:
        edges.extend((u + offset, w + offset) for u, w in atlas[c].edges)
        offset += atlas[c].v
    return first, atlas.id_of(edges)


def _closure(atlas: Atlas, gids: Iterable[int]) -> tuple[list[int], list[int]]:
    """Return (connected graphs needing hom counts, all graphs needing
    injective counts in dependency order)."""
    need: dict[int, None] = {}
    homs: set[int] = set()

    def visit(gid: int):
        if gid in need:
            return
        g = atlas[gid]
        if g.connected:
            homs.update(atlas.quotients(gid))
        else:
            a, b = _split(atlas, gid)
            visit(a)
            visit(b)
            for h in atlas.gluing(a, b):
                if h != gid:
                    visit(h)
        need[gid] = None

    for gid in gids:
        visit(gid)
    return sorted(homs), list(need)


def inj_counts_batch(adjs: np.ndarray, gids: Iterable[int], atlas: Atlas | None = None) -> dict[int, np.ndarray]:
    """Injective counts of atlas graphs for a batch of equally sized hosts."""
    atlas = atlas or get_atlas()
    adjs = np.asarray(adjs)
    if adjs.ndim == 2:
        adjs = adjs[None]
    n = adjs.shape[-1]
    gids = list(gids)
    for gid in gids:
        if atlas[gid].v > n:
            raise CountingError(f"host has {n} nodes, too few for {atlas[gid].name} "
                                f"({atlas[gid].v} nodes)")
    hom_ids, order = _closure(atlas, gids)
    homs = hom_counts_batch(adjs, hom_ids, atlas)
    inj: dict[int, np.ndarray] = {}
    for gid in order:
        g = atlas[gid]
        safe = n ** g.v < 2 ** 62
        if g.connected:
            terms = [(w, homs[h]) for h, w in atlas.quotients(gid).items()]
        else:
            a, b = _split(atlas, gid)
            prod = _as(inj[a], safe) * _as(inj[b], safe)
            terms = [(1, prod)] + [(-beta, inj[h]) for h, beta in atlas.gluing(a, b).items() if h != gid]
        acc = None
        for w, val in terms:
            val = _as(val, safe) * w
            acc = val if acc is None else acc + val
        inj[gid] = acc
    return {gid: inj[gid] for gid in gids}


def _as(x: np.ndarray, safe: bool) -> np.ndarray:
    if safe:
        return x if x.dtype == np.int64 else x.astype(np.int64)
    return x if x.dtype == object else x.astype(object)


@dataclass(frozen=True)
class CountVector:
    """Injective counts of atlas graphs in one host graph."""

    ids: tuple[int, ...]
    values: tuple[int, ...]
    n: int

    def __getitem__(self, gid: int) -> int:
        return self.values[self.ids.index(gid)]

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.ids, self.values))


def count_all(G: Graph, atlas: Atlas | None = None, ids: Iterable[int] | None = None) -> CountVector:
    """Injective counts of the requested atlas graphs (default: every atlas
    graph that fits in ``G``)."""
    atlas = atlas or get_atlas()
    ids = [g.id for g in atlas if g.v <= G.n] if ids is None else list(ids)
    res = inj_counts_batch(G.adjacency()[None], ids, atlas)
    return CountVector(tuple(ids), tuple(int(res[g][0]) for g in ids), G.n)


@dataclass(frozen=True, eq=False)
class StatVector:
    """Graph moments or cumulants over an ordered atlas basis."""

    basis: tuple[int, ...]
    values: np.ndarray
    n: int
    s: int = 1
    kind: str = "moment"

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.basis, self.values.tolist()))

    def to_json(self, atlas: Atlas | None = None) -> dict:
        atlas = atlas or get_atlas()
        return {
            "kind": self.kind, "n": self.n, "s": self.s,
            "basis": [atlas[g].name for g in self.basis],
            "keys": [atlas[g].key for g in self.basis],
            "values": [float(x) for x in self.values],
        }


def densities(counts: dict[int, np.ndarray], n: int, atlas: Atlas | None = None) -> dict[int, np.ndarray]:
    """Divide counts by the number of injective placements ``(n)_v``."""
    atlas = atlas or get_atlas()
    out = {}
    for gid, c in counts.items():
        denom = falling_factorial(n, atlas[gid].v)
        if c.dtype == object:
            out[gid] = np.array([int(x) / denom for x in c], dtype=float)
        else:
            out[gid] = c / denom
    return out


def moments(G: Graph, basis: Sequence[int], atlas: Atlas | None = None) -> StatVector:
    """Graph moments of a single graph: ``mu_g = c_g / (n)_{v(g)}``."""
    atlas = atlas or get_atlas()
    basis = tuple(basis)
    cv = count_all(G, atlas, basis)
    vals = np.array([c / falling_factorial(G.n, atlas[g].v) for g, c in zip(basis, cv.values)])
    return StatVector(basis, vals, G.n, 1, "moment")
