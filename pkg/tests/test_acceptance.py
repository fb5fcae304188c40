"""Acceptance criteria: one test per criterion, each looping over the whole corpus."""
import time
from concurrent.futures import ThreadPoolExecutor

import oracles
from cli_helpers import invocations, run
from conftest import CORPUS_NAMES, corpus_tri
from normalkit.coords import (
    CoordinateVector,
    System,
    arc_counts,
    euler_characteristic,
    is_admissible,
    is_matched,
    matching_matrix,
    residual,
    vertex_links,
    weight,
)
from normalkit.enumeration import enumerate_bounded, enumerate_vertex_surfaces, find_octagonal_candidates
from normalkit.reduce import (
    LOWER,
    UPPER,
    cut,
    elementary_reduction,
    find_t2_discs,
    from_coordinates,
    k_normality,
    normalize,
    tube_in_face,
    tube_in_tet,
    validate,
)
from normalkit.surfaces import analyze, kneser_check

TRIS = {name: corpus_tri(name) for name in CORPUS_NAMES}


def test_vertex_link_suite():
    start = time.perf_counter()
    for name, tri in TRIS.items():
        for link in vertex_links(tri):
            assert is_matched(tri, link) and is_admissible(link), name
            assert all(c == 0 for row in link.counts for c in row[4:]), name
            assert euler_characteristic(tri, link) == 2, name
            reps = analyze(tri, link)
            assert len(reps) == 1 and reps[0].is_vertex_link, name
            assert k_normality(from_coordinates(tri, link)) == 1, name
    assert time.perf_counter() - start < 1.0


def test_matching_and_weight_linearity():
    for name, tri in TRIS.items():
        rays = enumerate_vertex_surfaces(tri).rays
        w = [weight(tri, r) for r in rays]
        chi = [euler_characteristic(tri, r) for r in rays]
        rng = oracles.rng_for("linearity", name)
        for _ in range(200):
            coeffs = [rng.randint(0, 4) for _ in rays]
            v = CoordinateVector.zero(tri.n, System.ONE)
            for c, r in zip(coeffs, rays):
                v = v + r.scale(c)
            assert residual(tri, v) == [0] * len(matching_matrix(tri, System.ONE)), name
            assert weight(tri, v) == sum(c * x for c, x in zip(coeffs, w)), name
            assert euler_characteristic(tri, v) == sum(c * x for c, x in zip(coeffs, chi)), name


def test_enumeration_oracle_equivalence():
    start = time.perf_counter()
    for name, tri in TRIS.items():
        assert tri.n <= 3
        rays = {r.flat for r in enumerate_vertex_surfaces(tri).rays}
        bounded = enumerate_bounded(tri, System.ONE, 30)
        assert rays == oracles.extreme_rays(matching_matrix(tri, System.ONE), bounded), name
    assert time.perf_counter() - start < 60.0


def test_kneser_pigeonhole():
    for name, tri in TRIS.items():
        n = tri.n
        rays = enumerate_vertex_surfaces(tri).rays
        for r in rays:
            if len(analyze(tri, r)) != 1:
                continue
            reps = analyze(tri, r.scale(20 * n + 1))
            assert kneser_check(reps, n), name
        rng = oracles.rng_for("kneser", name)
        tried = 0
        while tried < 5:
            picks = rng.sample(rays, rng.randint(1, min(3, len(rays))))
            # 2c copies of any surface give at least c components, one-sided or not
            coeffs = [2 * rng.randint(1, 20 * n + 1) for _ in picks]
            v = CoordinateVector.zero(n, System.ONE)
            for c, r in zip(coeffs, picks):
                v = v + r.scale(c)
            if not is_admissible(v):
                continue
            reps = analyze(tri, v)
            if len(reps) <= 20 * n:
                continue
            tried += 1
            assert kneser_check(reps, n), name


def test_reduction_calculus():
    for name, tri in TRIS.items():
        one = enumerate_vertex_surfaces(tri).rays
        two = enumerate_vertex_surfaces(tri, System.TWO).rays
        # (c) cut undoes from_coordinates on every ray
        for v in list(one) + list(two):
            assert cut(from_coordinates(tri, v)) == v, name
        # (d) tubes inside tetrahedra do not change the cut
        rng = oracles.rng_for("calculus", name)
        for v in one:
            cs = from_coordinates(tri, v.scale(2))
            by_tet = {}
            for p, (t, _) in cs.pieces.items():
                by_tet.setdefault(t, []).append(p)
            t = rng.choice(sorted(by_tet))
            a, b = rng.sample(sorted(by_tet[t]), 2)
            assert cut(tube_in_tet(cs, t, a, b)) == v.scale(2), name
        # (a) and (b) on 500 random tube scripts
        done = 0
        while done < 500:
            v = oracles.random_combination(rng, one, max_terms=3, max_coeff=2)
            if not is_admissible(v) or weight(tri, v) > 24:
                continue
            cs = from_coordinates(tri, v)
            _, tubed = oracles.random_tube_script(cs, rng, rng.randint(1, 5))
            side = (UPPER, LOWER)[done % 2]
            if done % 25 == 0:
                cur = tubed
                while True:
                    discs = [d for d in find_t2_discs(cur, side) if d.strict]
                    if not discs:
                        break
                    nxt = elementary_reduction(cur, discs[0])
                    validate(nxt)
                    assert nxt.weight == cur.weight - 2, name
                    cur = nxt
            out, trace = normalize(tubed, side)
            assert all(s.weight_before - s.weight_after == 2 for s in trace.steps), name
            assert len(trace.steps) <= tubed.weight // 2, name
            assert out.weight == tubed.weight - 2 * len(trace.steps), name
            done += 1
        # (e) the tubed vertex-link pipeline, against the arrangement oracle
        for link in vertex_links(tri):
            cs = from_coordinates(tri, link.scale(3))
            f = next(f for f in sorted(cs.chords) if len(cs.chords[f]) >= 2)
            tubed = tube_in_face(cs, f, 0, 1)
            final, trace = normalize(tubed, find_t2_discs(tubed)[0].side)
            assert trace.outcome == "normalized" and cut(final) == link, name
            arr = oracles.Arrangement(cs)
            arr.tube(f, frozenset(cs.chords[f][0]), frozenset(cs.chords[f][1]))
            assert arr.normalize() == len(trace.steps), name
            faces = tri.skeleton.face_classes
            assert [arr.arc_types(g, fc.vertices) for g, fc in enumerate(faces)] == arc_counts(tri, link)


def test_one_octagon_search():
    elapsed = 0.0
    for name, tri in TRIS.items():
        start = time.perf_counter()
        found = find_octagonal_candidates(tri, 20)
        elapsed += time.perf_counter() - start
        got = [c.vector.flat for c in found]
        if tri.n == 1:
            want = oracles.naive_bounded(tri, System.TWO, 20, tri.skeleton,
                                         matching_matrix(tri, System.TWO), octagon_total=1)
        else:
            want = [v.flat for v in enumerate_bounded(tri, System.TWO, 20) if v.octagon_total == 1]
        assert sorted(got) == sorted(want), name
        for c in found:
            assert is_admissible(c.vector), name
            assert k_normality(from_coordinates(tri, c.vector)) == 2, name
    assert elapsed < 120.0


def test_cli_determinism():
    cases = [args for name in CORPUS_NAMES for args, _, _ in invocations(name)]

    def three_runs(args):
        a, b, c = run(args, threads=1), run(args, threads=1), run(args, threads=8)
        return args, a, b, c

    with ThreadPoolExecutor(max_workers=4) as pool:
        for args, a, b, c in pool.map(three_runs, cases):
            assert a.returncode == 0, (args, a.stderr)
            assert a.stdout == b.stdout == c.stdout, args
    assert {args[0] for args in cases} == {"validate", "skeleton", "enumerate", "spheres", "octagons",
                                           "analyze", "kneser", "normalize"}
