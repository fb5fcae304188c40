import pytest

import oracles
from conftest import corpus_tri
from normalkit.coords import (
    CoordinateVector,
    System,
    euler_characteristic,
    is_admissible,
    sum_vectors,
    vertex_link,
    vertex_links,
    weight,
)
from normalkit.enumeration import enumerate_vertex_surfaces
from normalkit.surfaces import (
    PIECE_SIZES,
    AdmissibilityError,
    analyze,
    build_surface,
    component_count,
    components,
    kneser_check,
)


def rays(tri):
    return enumerate_vertex_surfaces(tri).rays


def samples(tri):
    rs = rays(tri)
    out = list(rs) + [r + s for r in rs for s in rs] + [r.scale(3) for r in rs]
    return [v for v in out if is_admissible(v)]


def check_complex(tri, v, sc):
    sk = tri.skeleton
    assert sc.weight == weight(tri, v) == len(sc.corners)
    assert len(sc.pieces) == sum(v.flat)
    per_corner = {}
    for arc in sc.arcs:
        # both ends may be the same corner when two edges of the face are identified
        assert len(arc.corners) == 2
        for c in arc.corners:
            per_corner[c] = per_corner.get(c, 0) + 1
    for c, (ec, _) in enumerate(sc.corners):
        assert per_corner[c] == len(sk.edge_classes[ec])
    rows = [[0] * v.system.width for _ in range(tri.n)]
    for pc in sc.pieces:
        rows[pc.tet][pc.coord] += 1
        k = PIECE_SIZES[pc.type.kind]
        assert len(pc.arcs) == len(pc.corners) == k
        # consecutive arcs of the cycle share the listed corner
        for i, a in enumerate(pc.arcs):
            nxt = pc.arcs[(i + 1) % k]
            assert pc.corners[i] in sc.arcs[a].corners
            assert pc.corners[i] in sc.arcs[nxt].corners
    assert tuple(map(tuple, rows)) == v.counts
    # every arc is shared by exactly the two pieces that list it
    for a, (p1, p2) in enumerate(sc.arc_pieces):
        assert a in sc.pieces[p1].arcs and a in sc.pieces[p2].arcs


def test_zero_vector_gives_empty_complex(tri):
    sc = build_surface(tri, CoordinateVector.zero(tri.n, System.ONE))
    assert sc.corners == [] and sc.arcs == [] and sc.pieces == []
    assert components(sc) == []


def test_vertex_link_complex_is_its_triangles(tri):
    for i, link in enumerate(vertex_links(tri)):
        sc = build_surface(tri, link)
        verts = set(tri.skeleton.vertex_classes[i])
        assert all(p.type.kind == "tri" and (p.tet, p.coord) in verts for p in sc.pieces)


def test_complex_invariants(tri):
    for v in samples(tri):
        check_complex(tri, v, build_surface(tri, v))


def test_complex_invariants_two_normal(tri):
    for v in enumerate_vertex_surfaces(tri, System.TWO).rays:
        check_complex(tri, v, build_surface(tri, v))


def test_non_admissible_rejected():
    tri = corpus_tri("one_tet_a")
    v = CoordinateVector(System.ONE, ((0, 0, 0, 0, 1, 1, 0),))
    with pytest.raises(AdmissibilityError):
        build_surface(tri, v)


# -- components -----------------------------------------------------------------

def test_vertex_link_report(tri):
    for link in vertex_links(tri):
        (r,) = analyze(tri, link)
        assert (r.chi, r.genus, r.is_vertex_link, r.orientable) == (2, 0, True, True)


def test_double_gives_parallel_copies(tri):
    for v in rays(tri):
        (one,) = analyze(tri, v)
        if not one.two_sided:
            continue
        two = analyze(tri, v.scale(2))
        assert len(two) == 2
        assert two[0].coords == two[1].coords == v


def test_one_sided_double_is_connected():
    # the double of a one-sided surface is the boundary of its neighbourhood
    tri = corpus_tri("one_tet_a")
    klein = next(v for v in rays(tri) if not analyze(tri, v)[0].two_sided)
    reports = analyze(tri, klein.scale(2))
    assert len(reports) == 1
    assert reports[0].chi == 0 and reports[0].orientable


def test_ray5_components_match_union_find():
    tri = corpus_tri("two_tet_a")
    ray = rays(tri)[5]
    sc = build_surface(tri, ray)
    assert component_count(sc) == oracles.components_by_union_find(sc)


def test_component_counts_match_union_find(tri):
    for v in samples(tri):
        sc = build_surface(tri, v)
        assert component_count(sc) == oracles.components_by_union_find(sc)


def test_reports_add_up(tri):
    for v in samples(tri):
        reps = analyze(tri, v)
        assert sum_vectors([r.coords for r in reps]) == v
        assert sum(r.chi for r in reps) == euler_characteristic(tri, v)
        assert sum(weight(tri, r.coords) for r in reps) == weight(tri, v)
        for r in reps:
            assert r.chi == euler_characteristic(tri, r.coords)
            if r.orientable:
                assert r.genus == (2 - r.chi) // 2 and r.genus >= 0


def test_orientable_iff_two_sided_on_corpus(tri):
    if not tri.skeleton.orientable:
        pytest.skip("non-orientable triangulation")
    for v in samples(tri):
        for r in analyze(tri, v):
            assert r.orientable == r.two_sided


def test_one_sided_klein_bottles_in_quaternionic_space():
    tri = corpus_tri("two_tet_c")
    sided = [analyze(tri, v)[0] for v in rays(tri)]
    assert sorted((r.chi, r.two_sided) for r in sided) == [(0, False)] * 3 + [(2, True)]


# -- pigeonhole -----------------------------------------------------------------

def test_many_vertex_link_copies_group_together(tri):
    n = tri.n
    reps = analyze(tri, vertex_link(tri, 0).scale(20 * n + 1))
    groups = kneser_check(reps, n)
    assert [len(g) for g in groups] == [20 * n + 1]


def test_equal_coords_share_a_group(tri):
    v = vertex_link(tri, 0)
    assert kneser_check(analyze(tri, v.scale(2)), tri.n) == [[0, 1]]


def test_distinct_patterns_give_no_group():
    tri = corpus_tri("two_tet_a")
    reps = analyze(tri, sum_vectors(vertex_links(tri)))
    assert len(reps) == 4
    assert kneser_check(reps, tri.n) == []


def test_report_json_fields():
    tri = corpus_tri("one_tet_a")
    (r,) = analyze(tri, vertex_link(tri, 0))
    data = r.to_json()
    assert sorted(data) == ["chi", "componentId", "coords", "genus", "isVertexLink",
                            "orientable", "pattern", "twoSided"]
    assert data["pattern"] == [["T0", "T1", "T2", "T3"]]
