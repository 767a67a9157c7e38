import itertools
import json

import pytest

from graphcumulants.atlas import Atlas, AtlasError, build_atlas, canonical_form, set_partitions


def brute_key(edges, v):
    """Lexicographically smallest relabelled edge list over all permutations."""
    best = None
    for perm in itertools.permutations(range(v)):
        code = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or code < best:
            best = code
    return best


def brute_aut(edges, v):
    es = {frozenset(e) for e in edges}
    return sum({frozenset((p[a], p[b])) for a, b in edges} == es
               for p in itertools.permutations(range(v)))


def test_sizes(atlas):
    assert len(atlas) == 113
    by_e = [sum(1 for g in atlas if g.e == e and g.connected) for e in range(1, 7)]
    assert by_e == [1, 1, 3, 5, 12, 30]
    assert sum(g.connected for g in atlas) == 52


def test_fixed_ids(atlas):
    names = ["e1_edge", "e2_wedge", "e2_parallel", "e3_triangle", "e3_path", "e3_claw",
             "e3_edge_wedge", "e3_parallel"]
    assert [atlas[i].name for i in range(8)] == names
    assert atlas.basis(3, connected=True) == [0, 1, 3, 4, 5]


def test_canonical_form_matches_bruteforce(atlas):
    # distinct brute-force classes <=> distinct atlas entries, and aut agrees
    seen = set()
    for g in atlas:
        if g.v > 7:
            continue
        k = brute_key(g.edges, g.v)
        assert k not in seen
        seen.add(k)
        assert g.aut == brute_aut(g.edges, g.v)


def test_canonical_form_invariant_under_relabelling(rng, atlas):
    for g in atlas:
        perm = rng.permutation(g.v)
        relab = [(int(perm[a]), int(perm[b])) for a, b in g.edges]
        assert canonical_form(relab)[2] == g.key
        assert atlas.id_of(relab) == g.id


def test_known_automorphisms(atlas):
    aut = {g.name: g.aut for g in atlas}
    assert aut["e1_edge"] == 2
    assert aut["e2_wedge"] == 2
    assert aut["e3_triangle"] == 6
    assert aut["e3_claw"] == 6
    assert aut["e2_parallel"] == 8
    assert aut["e4_square"] == 8
    assert aut["e6_k4"] == 24


def test_components(atlas):
    g = atlas[atlas.lookup("e3_edge_wedge")]
    assert sorted(g.components) == [0, 1]
    for h in atlas:
        assert sum(atlas[c].e for c in h.components) == h.e
        assert h.connected == (len(h.components) == 1)


def test_lookup_errors(atlas):
    with pytest.raises(AtlasError):
        atlas.lookup("nope")
    with pytest.raises(AtlasError):
        atlas.lookup(1000)
    with pytest.raises(AtlasError):
        atlas.id_of([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)])


def test_set_partitions_bell_numbers():
    assert [sum(1 for _ in set_partitions(list(range(k)))) for k in range(1, 7)] == [1, 2, 5, 15, 52, 203]


def test_edge_partitions_of_wedge(atlas):
    parts = dict(atlas.edge_partitions(1))
    assert parts == {(1,): 1, (0, 0): 1}
    tri = dict(atlas.edge_partitions(3))
    assert tri == {(3,): 1, (0, 1): 3, (0, 0, 0): 1}


def test_gluing_wedge_edge(atlas):
    names = {atlas[h].name: b for h, b in atlas.gluing(1, 0).items()}
    assert names == {"e2_wedge": 4, "e3_triangle": 2, "e3_path": 4, "e3_claw": 2,
                     "e3_edge_wedge": 1}
    assert atlas.gluing(0, 1) == atlas.gluing(1, 0)
    names = {atlas[h].name: b for h, b in atlas.gluing(0, 0).items()}
    assert names == {"e1_edge": 2, "e2_wedge": 4, "e2_parallel": 1}


def test_gluing_too_large(atlas):
    with pytest.raises(AtlasError):
        atlas.gluing(atlas.lookup("e4_square"), 3)


def test_quotient_weights_edge_and_wedge(atlas):
    # inj(edge) = hom(edge); inj(wedge) = hom(wedge) - hom(edge)
    assert atlas.quotients(0) == {0: 1}
    assert atlas.quotients(1) == {1: 1, 0: -1}


def test_json_round_trip(atlas):
    small = build_atlas(3)
    again = Atlas.from_json(small.to_json())
    assert [g.key for g in again] == [g.key for g in small]
    assert json.loads(small.to_json())


def test_elimination_width(atlas):
    k4 = atlas.lookup("e6_k4")
    assert len(atlas.elimination_order(k4)) == 4
