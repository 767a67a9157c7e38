"""Catalogue of small edge-defined graphs.

Every isomorphism class of graphs without isolated nodes and with at most six
edges gets a stable integer id.  Alongside the graphs themselves the atlas
carries the combinatorial tables the statistics need: edge partitions (for
the moment/cumulant expansion), vertex-partition quotients (for turning
homomorphism counts into injective counts), gluing coefficients (for products
of counts) and elimination orders (for the homomorphism DP).
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

MAX_EDGES = 6

Edge = tuple[int, int]


class AtlasError(ValueError):
    pass


# ---------------------------------------------------------------------------
# small-graph helpers
# ---------------------------------------------------------------------------

def normalize_edges(edges: Iterable[Sequence[int]]) -> tuple[tuple[Edge, ...], int]:
    """Relabel the endpoints of ``edges`` densely (in sorted order of the
    original labels) and return ``(sorted edge tuple, node count)``."""
    es = set()
    for u, v in edges:
        if u == v:
            raise AtlasError(f"self-loop at node {u}")
        es.add((u, v) if u < v else (v, u))
    nodes = sorted({x for e in es for x in e})
    relabel = {x: i for i, x in enumerate(nodes)}
    out = tuple(sorted((relabel[u], relabel[v]) for u, v in es))
    return out, len(nodes)


def components(edges: Sequence[Edge]) -> list[list[Edge]]:
    """Split an edge list into connected components (each an edge list)."""
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, list[Edge]] = {}
    for e in edges:
        groups.setdefault(find(e[0]), []).append(e)
    return [groups[k] for k in sorted(groups, key=lambda r: min(min(e) for e in groups[r]))]


def _refined_colors(v: int, adj: list[set[int]]) -> list[int]:
    colors = [len(adj[x]) for x in range(v)]
    while True:
        sig = [(colors[x], tuple(sorted(colors[y] for y in adj[x]))) for x in range(v)]
        palette = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [palette[s] for s in sig]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def _canon_connected(edges: Sequence[Edge], v: int) -> tuple[tuple[Edge, ...], int]:
    # exhaustive search over labelings that respect an isomorphism-invariant
    # vertex coloring; automorphisms are the labelings hitting the minimum
    adj: list[set[int]] = [set() for _ in range(v)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    colors = _refined_colors(v, adj)
    classes: list[list[int]] = []
    for c in sorted(set(colors)):
        classes.append([x for x in range(v) if colors[x] == c])
    slots = []
    start = 0
    for cls in classes:
        slots.append(list(range(start, start + len(cls))))
        start += len(cls)

    best = None
    count = 0
    for perms in itertools.product(*(itertools.permutations(s) for s in slots)):
        pos = [0] * v
        for cls, perm in zip(classes, perms):
            for x, p in zip(cls, perm):
                pos[x] = p
        code = tuple(sorted((pos[a], pos[b]) if pos[a] < pos[b] else (pos[b], pos[a])
                            for a, b in edges))
        if best is None or code < best:
            best, count = code, 1
        elif code == best:
            count += 1
    return best, count


@lru_cache(maxsize=None)
def _canon_cached(edges: tuple[Edge, ...]) -> tuple[tuple[Edge, ...], int, str]:
    comps = []
    for comp in components(edges):
        ce, cv = normalize_edges(comp)
        code, aut = _canon_connected(ce, cv)
        comps.append((cv, len(code), code, aut))
    # larger components first; ties broken by the canonical code
    comps.sort(key=lambda c: (-c[0], -c[1], c[2]))
    out: list[Edge] = []
    offset = 0
    aut = 1
    for cv, _, code, a in comps:
        out.extend((u + offset, w + offset) for u, w in code)
        offset += cv
        aut *= a
    for mult in Counter((c[0], c[2]) for c in comps).values():
        aut *= math.factorial(mult)
    canon = tuple(out)
    return canon, aut, " ".join(f"{u}-{w}" for u, w in canon)


def canonical_form(edges: Iterable[Sequence[int]]) -> tuple[tuple[Edge, ...], int, str]:
    """Canonical labeling of an edge-defined graph.

    Returns ``(canonical_edges, aut, key)`` where ``key`` is a string that is
    equal for two inputs exactly when they are isomorphic, and ``aut`` is the
    size of the automorphism group.  Isolated nodes are not representable.

    >>> canonical_form([(5, 7), (7, 9), (9, 5)])[1]
    6
    """
    norm, _ = normalize_edges(edges)
    return _canon_cached(norm)


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All set partitions of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


# ---------------------------------------------------------------------------
# atlas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallGraph:
    id: int
    name: str
    v: int
    e: int
    edges: tuple[Edge, ...]
    key: str
    aut: int
    connected: bool
    components: tuple[int, ...]


_NAMED = {
    "e1_edge": [(0, 1)],
    "e2_wedge": [(0, 1), (0, 2)],
    "e2_parallel": [(0, 1), (2, 3)],
    "e3_triangle": [(0, 1), (1, 2), (0, 2)],
    "e3_claw": [(0, 1), (0, 2), (0, 3)],
    "e3_path": [(0, 1), (1, 2), (2, 3)],
    "e3_edge_wedge": [(0, 1), (2, 3), (2, 4)],
    "e3_parallel": [(0, 1), (2, 3), (4, 5)],
    "e4_square": [(0, 1), (1, 2), (2, 3), (0, 3)],
    "e6_k4": [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
}


class Atlas:
    """Immutable, deterministically ordered list of small graphs.

    Ids follow the order (edge count, node count, canonical key).  The
    derived tables are computed on first use and memoized.
    """

    def __init__(self, graphs: list[SmallGraph], max_edges: int):
        self.graphs = graphs
        self.max_edges = max_edges
        self.index = {g.key: g.id for g in graphs}
        self.names = {g.name: g.id for g in graphs}
        self._partitions: dict[int, tuple] = {}
        self._gluing: dict[tuple[int, int], dict[int, int]] = {}
        self._quotients: dict[int, dict[int, int]] = {}
        self._orders: dict[int, tuple[int, ...]] = {}
        # scratch space for tables derived by other modules
        self.memo: dict = {}

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, gid: int) -> SmallGraph:
        return self.graphs[gid]

    def __iter__(self):
        return iter(self.graphs)

    def id_of(self, edges: Iterable[Sequence[int]]) -> int:
        _, _, key = canonical_form(edges)
        try:
            return self.index[key]
        except KeyError:
            raise AtlasError(f"graph {key!r} is not in the atlas "
                             f"(max_edges={self.max_edges})") from None

    def lookup(self, ref: int | str) -> int:
        """Accept an id or a name and return the id."""
        if isinstance(ref, str):
            if ref not in self.names:
                raise AtlasError(f"unknown atlas name {ref!r}")
            return self.names[ref]
        if not 0 <= ref < len(self.graphs):
            raise AtlasError(f"atlas id {ref} out of range")
        return int(ref)

    def basis(self, r: int, connected: bool = False) -> list[int]:
        """Ids of graphs with at most ``r`` edges (optionally connected only)."""
        if not 1 <= r <= self.max_edges:
            raise AtlasError(f"order {r} outside 1..{self.max_edges}")
        return [g.id for g in self.graphs if g.e <= r and (g.connected or not connected)]

    # -- edge partitions ----------------------------------------------------

    def edge_partitions(self, gid: int) -> tuple[tuple[tuple[int, ...], int], ...]:
        """Aggregated partitions of the edges of graph ``gid``.

        Each entry is ``(sorted ids of the part subgraphs, multiplicity)``.
        """
        if gid not in self._partitions:
            edges = list(self.graphs[gid].edges)
            agg: Counter = Counter()
            for part in set_partitions(edges):
                agg[tuple(sorted(self.id_of(p) for p in part))] += 1
            self._partitions[gid] = tuple(sorted(agg.items(), key=lambda kv: (len(kv[0]), kv[0])))
        return self._partitions[gid]

    # -- gluing -------------------------------------------------------------

    def gluing(self, a: int, b: int) -> dict[int, int]:
        """Coefficients ``beta`` with ``c_a(G) c_b(G) = sum_h beta[h] c_h(G)``.

        Counts are injective homomorphism counts.  Each pair of injective maps
        is classified by which nodes of ``a`` and ``b`` share an image; every
        such overlap pattern is a partial bijection between the node sets, and
        the union graph it induces is the term it contributes to.
        """
        ga, gb = self.graphs[a], self.graphs[b]
        if ga.e + gb.e > self.max_edges:
            raise AtlasError(f"gluing {ga.name} with {gb.name} exceeds {self.max_edges} edges")
        pair = (a, b) if a <= b else (b, a)
        if pair not in self._gluing:
            self._gluing[pair] = self._glue(self.graphs[pair[0]], self.graphs[pair[1]])
        return self._gluing[pair]

    def _glue(self, ga: SmallGraph, gb: SmallGraph) -> dict[int, int]:
        va, vb = ga.v, gb.v
        out: Counter = Counter()
        for k in range(min(va, vb) + 1):
            for left in itertools.combinations(range(va), k):
                for right in itertools.permutations(range(vb), k):
                    relabel = {}
                    nxt = va
                    for x in range(vb):
                        if x in right:
                            relabel[x] = left[right.index(x)]
                        else:
                            relabel[x] = nxt
                            nxt += 1
                    union = set(ga.edges)
                    for u, w in gb.edges:
                        p, q = relabel[u], relabel[w]
                        union.add((p, q) if p < q else (q, p))
                    out[self.id_of(union)] += 1
        return dict(sorted(out.items()))

    # -- vertex-partition quotients ------------------------------------------

    def quotients(self, gid: int) -> dict[int, int]:
        """Moebius weights turning homomorphism counts into injective counts.

        ``inj(g) = sum_h w[h] hom(h)`` where the sum runs over loop-free
        quotients ``g / pi`` of the vertex-partition lattice (parallel edges
        merged) and ``w`` aggregates ``prod_B (-1)^(|B|-1) (|B|-1)!``.
        Only defined for connected graphs.
        """
        g = self.graphs[gid]
        if not g.connected:
            raise AtlasError("quotient tables are only built for connected graphs")
        if gid not in self._quotients:
            agg: Counter = Counter()
            for part in set_partitions(list(range(g.v))):
                block = {}
                for i, B in enumerate(part):
                    for x in B:
                        block[x] = i
                if any(block[u] == block[w] for u, w in g.edges):
                    continue
                weight = 1
                for B in part:
                    weight *= (-1) ** (len(B) - 1) * math.factorial(len(B) - 1)
                q = {(min(block[u], block[w]), max(block[u], block[w])) for u, w in g.edges}
                agg[self.id_of(q)] += weight
            self._quotients[gid] = {h: c for h, c in sorted(agg.items()) if c}
        return self._quotients[gid]

    # -- elimination orders --------------------------------------------------

    def elimination_order(self, gid: int) -> tuple[int, ...]:
        """Vertex elimination order for the homomorphism DP.

        Found by exhaustive search over all orders, minimizing the width (the
        largest number of neighbours at elimination time) and then the number
        of width-2 steps.  Orders define tree decompositions with bags equal
        to each vertex plus its neighbours at elimination.
        """
        if gid not in self._orders:
            g = self.graphs[gid]
            best = None
            for order in itertools.permutations(range(g.v)):
                cost = _elimination_cost(g.v, g.edges, order)
                if best is None or cost < best[0]:
                    best = (cost, order)
            self._orders[gid] = best[1]
        return self._orders[gid]

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "max_edges": self.max_edges,
            "graphs": [
                {"id": g.id, "name": g.name, "v": g.v, "e": g.e,
                 "edges": [list(e) for e in g.edges], "key": g.key, "aut": g.aut,
                 "connected": g.connected, "components": list(g.components)}
                for g in self.graphs
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Atlas":
        doc = json.loads(text)
        graphs = [
            SmallGraph(id=d["id"], name=d["name"], v=d["v"], e=d["e"],
                       edges=tuple(tuple(e) for e in d["edges"]), key=d["key"], aut=d["aut"],
                       connected=d["connected"], components=tuple(d["components"]))
            for d in doc["graphs"]
        ]
        for i, g in enumerate(graphs):
            if g.id != i:
                raise AtlasError("atlas file ids are not contiguous")
        return cls(graphs, doc["max_edges"])


def _elimination_cost(v: int, edges: Sequence[Edge], order: Sequence[int]) -> tuple[int, int]:
    adj = [set() for _ in range(v)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    width = 0
    heavy = 0
    for x in order:
        nb = adj[x]
        width = max(width, len(nb))
        if len(nb) >= 2:
            heavy += 1
        for y in nb:
            adj[y].discard(x)
            adj[y].update(nb - {y})
        adj[x] = set()
    return width, heavy


def build_atlas(max_edges: int = MAX_EDGES) -> Atlas:
    """Enumerate all graphs without isolated nodes with 1..max_edges edges.

    Starts from the single edge and grows by adding one edge in every possible
    position, deduplicating through :func:`canonical_form`.
    """
    if not 1 <= max_edges <= MAX_EDGES:
        raise AtlasError(f"max_edges must be in 1..{MAX_EDGES}, got {max_edges}")
    layer = {canonical_form([(0, 1)])[2]: canonical_form([(0, 1)])}
    found = dict(layer)
    for _ in range(1, max_edges):
        nxt = {}
        for edges, _, _ in layer.values():
            v = 1 + max(max(e) for e in edges)
            present = set(edges)
            cands = [(a, b) for a in range(v) for b in range(a + 1, v) if (a, b) not in present]
            cands += [(a, v) for a in range(v)]
            cands.append((v, v + 1))
            for c in cands:
                form = canonical_form(edges + (c,))
                nxt.setdefault(form[2], form)
        layer = nxt
        found.update(nxt)

    def sort_key(item):
        edges, _, key = item
        return (len(edges), 1 + max(max(e) for e in edges), key)

    ordered = sorted(found.values(), key=sort_key)
    key_to_id = {f[2]: i for i, f in enumerate(ordered)}
    named = {canonical_form(es)[2]: nm for nm, es in _NAMED.items()}

    groups: Counter = Counter()
    graphs = []
    for i, (edges, aut, key) in enumerate(ordered):
        v = 1 + max(max(e) for e in edges)
        comps = components(edges)
        connected = len(comps) == 1
        comp_ids = tuple(sorted(key_to_id[canonical_form(c)[2]] for c in comps))
        tag = (len(edges), v, connected)
        groups[tag] += 1
        name = named.get(key) or f"e{len(edges)}_v{v}_{'c' if connected else 'd'}{groups[tag]:02d}"
        graphs.append(SmallGraph(id=i, name=name, v=v, e=len(edges), edges=edges, key=key,
                                 aut=aut, connected=connected, components=comp_ids))
    return Atlas(graphs, max_edges)


@lru_cache(maxsize=None)
def get_atlas(max_edges: int = MAX_EDGES) -> Atlas:
    """Shared atlas instance (built once per process)."""
    return build_atlas(max_edges)
