import itertools

import pytest

import oracles
from conftest import CORPUS, corpus_tri
from normalkit.coords import (
    EDGES,
    CoordinateVector,
    MatchingError,
    PieceType,
    System,
    edge_corner_counts,
    euler_characteristic,
    is_admissible,
    is_matched,
    matching_matrix,
    piece_arc_table,
    piece_arcs,
    piece_corners,
    residual,
    vertex_link,
    vertex_links,
    weight,
)
from normalkit.enumeration import enumerate_vertex_surfaces
from normalkit.surfaces import build_surface


def unit(n, system, t, p):
    rows = [[0] * system.width for _ in range(n)]
    rows[t][p] = 1
    return CoordinateVector(system, tuple(tuple(r) for r in rows))


# -- piece incidence ----------------------------------------------------------

def test_triangle_arc_in_face_containing_its_vertex():
    assert piece_arc_table(PieceType("tri", 0), 3) == (0,)
    assert piece_arc_table(PieceType("tri", 0), 0) == ()


def test_quad_arc_cuts_off_partner():
    assert piece_arc_table(PieceType("quad", 0), 3) == (2,)


def test_octagon_arcs_cut_off_the_far_pair():
    assert piece_arc_table(PieceType("oct", 0), 3) == (0, 1)


@pytest.mark.parametrize("coord", range(10))
def test_arcs_agree_with_corner_geometry(coord):
    # each arc in face f joins two edges of f; the endpoints on each edge must total the corner count
    for f in range(4):
        on_edge = {e: 0 for e in range(6) if f not in EDGES[e]}
        for cut in piece_arcs(coord, f):
            for e in on_edge:
                if cut in EDGES[e]:
                    on_edge[e] += 1
        for e, k in on_edge.items():
            assert k == piece_corners(coord, e) == oracles.corners(coord, EDGES[e])


def test_piece_names():
    assert str(PieceType.from_coord(4)) == "Q01|23"
    assert str(PieceType.from_coord(9)) == "O03|12"
    assert PieceType.from_coord(6).coord == 6


# -- matching -----------------------------------------------------------------

def test_matrix_dimensions(tri):
    n = tri.n
    one = matching_matrix(tri, System.ONE)
    two = matching_matrix(tri, System.TWO)
    assert len(one) == len(two) == 6 * n
    assert {len(r) for r in one} == {7 * n}
    assert {len(r) for r in two} == {10 * n}


def test_vertex_links_matched(tri):
    for system in System:
        for v in vertex_links(tri, system):
            assert not any(residual(tri, v))


def test_quad_unit_unmatched():
    tri = corpus_tri("two_tet_a")
    # a lone quad in one tetrahedron leaves arcs with nothing on the far side
    v = unit(tri.n, System.ONE, 0, 4)
    assert any(residual(tri, v))
    assert not is_matched(tri, v)
    with pytest.raises(MatchingError):
        edge_corner_counts(tri, v)


@pytest.mark.parametrize("name", ["one_tet_a", "two_tet_a", "three_tet_a"])
def test_residuals_against_face_arc_counts(name):
    tri = corpus_tri(name)
    text = (CORPUS / f"{name}.tri").read_text()
    table = oracles.gluing_table(text)
    rng = oracles.rng_for("residual", name)
    for _ in range(20):
        flat = [rng.randint(0, 3) for _ in range(7 * tri.n)]
        v = CoordinateVector.from_flat(System.ONE, flat)
        ok = True
        for (t, f), (k, p) in table.items():
            for u in range(4):
                if u == f:
                    continue
                mine = sum(flat[t * 7 + c] * piece_arcs(c, f).count(u) for c in range(7))
                theirs = sum(flat[k * 7 + c] * piece_arcs(c, p[f]).count(p[u]) for c in range(7))
                ok = ok and mine == theirs
        assert is_matched(tri, v) == ok


# -- admissibility ------------------------------------------------------------

def test_admissibility_examples():
    tris = CoordinateVector(System.TWO, ((1, 2, 0, 3, 0, 0, 0, 0, 0, 0),))
    two_quads = CoordinateVector(System.TWO, ((0, 0, 0, 0, 1, 1, 0, 0, 0, 0),))
    quad_oct = CoordinateVector(System.TWO, ((0, 0, 0, 0, 1, 0, 0, 1, 0, 0),))
    assert is_admissible(tris)
    assert not is_admissible(two_quads)
    assert not is_admissible(quad_oct)
    assert is_admissible(quad_oct, strict=False)
    assert not is_admissible(two_quads, strict=False)


def test_zero_vector_is_admissible_and_matched(tri):
    z = CoordinateVector.zero(tri.n, System.TWO)
    assert is_admissible(z) and is_matched(tri, z)
    assert weight(tri, z) == 0


# -- weight and euler characteristic -------------------------------------------

def test_one_vertex_link_weight_is_twice_edge_count(tri):
    sk = tri.skeleton
    if len(sk.vertex_classes) != 1:
        pytest.skip("needs a one-vertex triangulation")
    assert weight(tri, vertex_link(tri, 0)) == 2 * len(sk.edge_classes)


def test_vertex_link_euler(tri):
    for v in vertex_links(tri):
        assert euler_characteristic(tri, v) == 2


def test_linearity_on_rays(tri):
    rays = enumerate_vertex_surfaces(tri).rays
    rng = oracles.rng_for("linearity", len(rays), tri.n)
    for _ in range(10):
        a, b = rng.choice(rays), rng.choice(rays)
        assert weight(tri, a.scale(2)) == 2 * weight(tri, a)
        assert weight(tri, a + b) == weight(tri, a) + weight(tri, b)
        assert euler_characteristic(tri, a + b) == euler_characteristic(tri, a) + euler_characteristic(tri, b)


def test_euler_matches_explicit_complex_on_two_tet_ray3():
    tri = corpus_tri("two_tet_a")
    ray = enumerate_vertex_surfaces(tri).rays[3]
    sc = build_surface(tri, ray)
    assert euler_characteristic(tri, ray) == oracles.euler_from_complex(sc)


def test_euler_matches_complex_on_every_ray(tri):
    for ray in enumerate_vertex_surfaces(tri).rays:
        assert euler_characteristic(tri, ray) == oracles.euler_from_complex(build_surface(tri, ray))


def test_corner_counts_representative_independent(tri):
    for ray in enumerate_vertex_surfaces(tri).rays:
        sk = tri.skeleton
        for cls in sk.edge_classes:
            seen = {sum(ray[(t, p)] * oracles.corners(p, EDGES[e]) for p in range(7)) for t, e in cls}
            assert len(seen) == 1


# -- json ---------------------------------------------------------------------

def test_json_round_trip():
    v = CoordinateVector(System.TWO, ((1, 0, 0, 0, 0, 0, 0, 1, 0, 0), (0,) * 10))
    assert CoordinateVector.from_json(v.to_json()) == v
    assert v.dumps() == '{"system":"2N","counts":[[1,0,0,0,0,0,0,1,0,0],[0,0,0,0,0,0,0,0,0,0]]}'


def test_system_conversion():
    v = CoordinateVector(System.ONE, ((1, 0, 0, 0, 2, 0, 0),))
    up = v.to_system(System.TWO)
    assert up.flat == (1, 0, 0, 0, 2, 0, 0, 0, 0, 0)
    assert up.to_system(System.ONE) == v
    with pytest.raises(ValueError):
        unit(1, System.TWO, 0, 8).to_system(System.ONE)


@pytest.mark.parametrize("bad", [((1, 0),), ((-1, 0, 0, 0, 0, 0, 0),)])
def test_vector_shape_checked(bad):
    with pytest.raises(ValueError):
        CoordinateVector(System.ONE, bad)


def test_every_octagon_unit_meets_axis_twice():
    for axis, c in itertools.product(range(3), [7, 8, 9]):
        if c - 7 != axis:
            continue
        for e, (a, b) in enumerate(EDGES):
            expect = 2 if (a, b) in oracles.AXES[axis] else 1
            assert piece_corners(c, e) == expect
