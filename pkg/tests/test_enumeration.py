import pytest

import oracles
from conftest import corpus_tri
from normalkit.coords import (
    System,
    euler_characteristic,
    is_admissible,
    is_matched,
    matching_matrix,
    vertex_links,
    weight,
)
from normalkit.enumeration import (
    RayLimitExceeded,
    enumerate_bounded,
    enumerate_vertex_surfaces,
    extreme_rays,
    find_normal_spheres,
    find_octagonal_candidates,
    hyperplane_order,
    primitive,
)
from normalkit.surfaces import analyze


def test_rays_nonzero_and_matched(tri):
    for ray in enumerate_vertex_surfaces(tri).rays:
        assert not ray.is_zero
        assert is_matched(tri, ray)
        assert is_admissible(ray)


def test_rays_match_bounded_oracle(tri):
    rays = {r.flat for r in enumerate_vertex_surfaces(tri).rays}
    bounded = enumerate_bounded(tri, System.ONE, 30)
    assert rays == oracles.extreme_rays(matching_matrix(tri, System.ONE), bounded)


def test_two_tet_a_rays_at_weight_forty():
    tri = corpus_tri("two_tet_a")
    rays = {r.flat for r in enumerate_vertex_surfaces(tri).rays}
    bounded = enumerate_bounded(tri, System.ONE, 40)
    assert rays == oracles.extreme_rays(matching_matrix(tri, System.ONE), bounded)
    assert len(rays) == 7


def test_scaling_keeps_admissibility(tri):
    for system in System:
        for ray in enumerate_vertex_surfaces(tri, system).rays:
            assert is_admissible(ray) == is_admissible(ray.scale(2))


def test_rays_are_primitive(tri):
    for ray in enumerate_vertex_surfaces(tri).rays:
        assert primitive(ray.flat) == ray.flat


def test_ray_order_is_canonical(tri):
    rays = enumerate_vertex_surfaces(tri).rays
    keys = [(weight(tri, r), r.flat) for r in rays]
    assert keys == sorted(keys)


def test_ray_limit_reported():
    tri = corpus_tri("three_tet_a")
    with pytest.raises(RayLimitExceeded):
        enumerate_vertex_surfaces(tri, System.TWO, ray_limit=2)


def test_double_description_simple_cone():
    # x0 - x1 = 0 and x2 free: rays e0+e1 and e2
    assert extreme_rays([[1, -1, 0]], 3) == [(0, 0, 1), (1, 1, 0)]


def test_hyperplane_order_sparse_first():
    assert hyperplane_order([[1, 1, 1], [0, 1, 0], [1, 0, -1]]) == [1, 2, 0]


# -- bounded search -------------------------------------------------------------

def test_weight_zero_is_the_empty_surface(tri):
    for system in System:
        out = enumerate_bounded(tri, system, 0)
        assert [v.is_zero for v in out] == [True]
        assert enumerate_bounded(tri, system, 0, octagon_total=0) == out
        assert enumerate_bounded(tri, system, 0, octagon_total=1) == []


def test_bounded_results_admissible_and_matched(tri):
    out = enumerate_bounded(tri, System.TWO, 12)
    assert all(is_admissible(v) and is_matched(tri, v) and weight(tri, v) <= 12 for v in out)


def test_one_tet_a_order_independent():
    tri = corpus_tri("one_tet_a")
    base = enumerate_bounded(tri, System.ONE, 12)
    rng = oracles.rng_for("order", "one_tet_a")
    for _ in range(3):
        order = list(range(7))
        rng.shuffle(order)
        assert enumerate_bounded(tri, System.ONE, 12, order=order) == base


@pytest.mark.parametrize("name", ["one_tet_a", "one_tet_b", "one_tet_c"])
@pytest.mark.parametrize("system", list(System))
def test_bounded_matches_independent_recount(name, system):
    tri = corpus_tri(name)
    got = [v.flat for v in enumerate_bounded(tri, system, 12)]
    want = oracles.naive_bounded(tri, system, 12, tri.skeleton, matching_matrix(tri, system))
    assert sorted(got) == want


def test_parallel_matches_serial():
    tri = corpus_tri("three_tet_a")
    assert enumerate_bounded(tri, System.TWO, 12, workers=3) == enumerate_bounded(tri, System.TWO, 12, workers=1)


def test_negative_bound_rejected(tri):
    with pytest.raises(ValueError):
        enumerate_bounded(tri, System.ONE, -1)


# -- spheres --------------------------------------------------------------------

def test_spheres_include_vertex_links(tri):
    spheres = {s.flat for s in find_normal_spheres(tri)}
    assert {v.flat for v in vertex_links(tri)} <= spheres


def test_spheres_are_connected_spheres(tri):
    for s in find_normal_spheres(tri):
        assert euler_characteristic(tri, s) == 2
        assert len(analyze(tri, s)) == 1


@pytest.mark.parametrize("name", ["two_tet_a", "one_tet_b", "three_tet_a"])
def test_spheres_match_bounded_oracle(name):
    tri = corpus_tri(name)
    found = {s.flat for s in find_normal_spheres(tri) if weight(tri, s) <= 30}
    oracle = {v.flat for v in enumerate_bounded(tri, System.ONE, 30)
              if not v.is_zero and euler_characteristic(tri, v) == 2 and len(analyze(tri, v)) == 1}
    assert found == oracle


# -- octagons ---------------------------------------------------------------------

def test_octagon_candidates_have_one_octagon(tri):
    for c in find_octagonal_candidates(tri, 16):
        octs = [x for row in c.vector.counts for x in row[7:]]
        assert sorted(octs)[-1] == 1 and sum(octs) == 1
        assert c.weight == weight(tri, c.vector)
        assert c.chi == euler_characteristic(tri, c.vector)


def test_octagon_candidates_below_minimum_weight_are_empty():
    tri = corpus_tri("one_tet_a")
    sweep = [v for v in enumerate_bounded(tri, System.TWO, 20) if v.octagon_total == 1]
    lightest = min(weight(tri, v) for v in sweep)
    assert find_octagonal_candidates(tri, lightest - 1) == []
    assert find_octagonal_candidates(tri, lightest)
