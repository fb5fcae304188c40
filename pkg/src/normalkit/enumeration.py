"""Solution enumeration for the matching equations.

Two independent routes:

* :func:`enumerate_vertex_surfaces` runs the double description method on the
  cone ``{x >= 0, Mx = 0}`` in exact integer arithmetic;
* :func:`enumerate_bounded` lists every matched admissible vector up to a weight
  bound by branch and bound, and is the oracle the first one is checked against.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import floor, gcd
from typing import Iterable, Optional, Sequence

from .coords import (CoordinateVector, System, euler_characteristic, is_admissible,
                     matching_matrix, vertex_links, weight, weight_functional)
from .triangulation import Triangulation, parse_triangulation, serialize_triangulation


class RayLimitExceeded(RuntimeError):
    def __init__(self, limit: int, stage: int):
        super().__init__(f"double description exceeded {limit} intermediate rays "
                         f"at hyperplane {stage}")
        self.limit = limit
        self.stage = stage


@dataclass
class EnumerationResult:
    rays: list[CoordinateVector]
    stats: dict = field(default_factory=dict)


def canonical_order(tri: Triangulation, vectors: Iterable[CoordinateVector]) -> list[CoordinateVector]:
    unique = {v.flat: v for v in vectors}
    return sorted(unique.values(), key=lambda v: (weight(tri, v), v.flat))


def primitive(vec: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for x in vec:
        g = gcd(g, x)
    return tuple(x // g for x in vec) if g > 1 else tuple(vec)


# --------------------------------------------------------------------------
# Double description
# --------------------------------------------------------------------------

def hyperplane_order(rows: Sequence[Sequence[int]]) -> list[int]:
    """Rows by increasing number of nonzeros, ties broken lexicographically."""
    return sorted(range(len(rows)), key=lambda i: (sum(1 for a in rows[i] if a), tuple(rows[i]), i))


def extreme_rays(rows: Sequence[Sequence[int]], dim: int, ray_limit: Optional[int] = None,
                 stats: Optional[dict] = None) -> list[tuple[int, ...]]:
    """Extreme rays of ``{x in R^dim : x >= 0, row.x = 0 for all rows}``, primitive."""
    rays: list[tuple[tuple[int, ...], int]] = []
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        rays.append((tuple(e), 1 << i))
    examined = 0
    order = hyperplane_order(rows)
    for processed, ri in enumerate(order):
        row = rows[ri]
        nz = [(j, a) for j, a in enumerate(row) if a]
        if not nz:
            continue
        zero, pos, neg = [], [], []
        for r in rays:
            s = sum(a * r[0][j] for j, a in nz)
            (zero if s == 0 else pos if s > 0 else neg).append((r, s))
        new = [r for r, _ in zero]
        max_support = processed + 3
        supports = [r[1] for r in rays]
        for (p, sp), (q, sq) in product(pos, neg):
            examined += 1
            union = p[1] | q[1]
            if bin(union).count("1") > max_support:
                continue
            adjacent = True
            for s in supports:
                if s != p[1] and s != q[1] and s & union == s:
                    adjacent = False
                    break
            if not adjacent:
                continue
            vec = primitive([sp * b - sq * a for a, b in zip(p[0], q[0])])
            new.append((vec, union))
        rays = new
        if ray_limit is not None and len(rays) > ray_limit:
            raise RayLimitExceeded(ray_limit, processed)
    if stats is not None:
        stats["pairs_examined"] = examined
        stats["cone_rays"] = len(rays)
        stats["hyperplanes"] = len(order)
    return sorted({r[0] for r in rays})


def enumerate_vertex_surfaces(tri: Triangulation, system: System = System.ONE,
                              ray_limit: Optional[int] = None,
                              strict: bool = True) -> EnumerationResult:
    stats: dict = {}
    rows = matching_matrix(tri, system)
    raw = extreme_rays(rows, system.width * tri.n, ray_limit, stats)
    vecs = [CoordinateVector.from_flat(system, r) for r in raw]
    kept = [v for v in vecs if is_admissible(v, strict)]
    stats["rays_kept"] = len(kept)
    return EnumerationResult(canonical_order(tri, kept), stats)


# --------------------------------------------------------------------------
# Bounded branch and bound
# --------------------------------------------------------------------------

def _rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    rows = [r[:] for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


class _Subproblem:
    """Matched vectors supported on ``columns`` (global indices) with lower bounds.

    Columns are eliminated in the given order, so the free variables are the
    ones the elimination does not pick as pivots; the search runs over those.
    """

    def __init__(self, rows, columns, lower, upper, wcoef, octcols):
        k = len(columns)
        sub = [[Fraction(row[c]) for c in columns] for row in rows]
        sub = [r for r in sub if any(r)]
        red, piv = _rref(sub, k) if sub else ([], [])
        self.columns = columns
        self.lower = lower
        self.upper = upper
        self.free = [j for j in range(k) if j not in piv]
        self.pivots = piv
        # pivot value * denom = sum(coef[j] * free_j)
        self.exprs = []
        for r, pc in zip(red, piv):
            den = 1
            for j in self.free:
                if r[j]:
                    den = den * r[j].denominator // gcd(den, r[j].denominator)
            self.exprs.append((den, [int(-r[j] * den) for j in self.free]))
        self.wcoef = wcoef
        self.octcols = octcols

    def solutions(self, max_weight: int, octagon_total: Optional[int]):
        free = self.free
        m = len(free)
        lo = [self.lower[j] for j in free]
        hi = [self.upper[j] for j in free]
        if any(a > b for a, b in zip(lo, hi)):
            return
        exprs = self.exprs
        plo = [self.lower[j] for j in self.pivots]
        phi = [self.upper[j] for j in self.pivots]
        # weight and octagon count as linear forms in the free variables
        wvec = [Fraction(self.wcoef[j]) for j in free]
        ovec = [Fraction(1 if j in self.octcols else 0) for j in free]
        for (den, coefs), pj in zip(exprs, self.pivots):
            for i, a in enumerate(coefs):
                if a:
                    wvec[i] += self.wcoef[pj] * Fraction(a, den)
                    if pj in self.octcols:
                        ovec[i] += Fraction(a, den)
        # suffix ranges of the linear forms over the unassigned free variables
        def suffix(coefs):
            smin = [0] * (m + 1)
            smax = [0] * (m + 1)
            for i in range(m - 1, -1, -1):
                a = coefs[i]
                x, y = a * lo[i], a * hi[i]
                smin[i] = smin[i + 1] + min(x, y)
                smax[i] = smax[i + 1] + max(x, y)
            return smin, smax
        psuf = [suffix(c) for _, c in exprs]
        wsuf = suffix(wvec)
        osuf = suffix(ovec)
        values = [0] * m
        partial = [0] * len(exprs)
        state = {"w": Fraction(0), "o": Fraction(0)}

        def feasible(depth) -> bool:
            w = state["w"]
            if w + wsuf[0][depth] > max_weight:
                return False
            if octagon_total is not None:
                o = state["o"]
                if not (o + osuf[0][depth] <= octagon_total <= o + osuf[1][depth]):
                    return False
            for k, (den, _) in enumerate(exprs):
                smin, smax = psuf[k]
                a = partial[k] + smin[depth]
                b = partial[k] + smax[depth]
                if b < plo[k] * den or a > phi[k] * den:
                    return False
            return True

        def rec(depth):
            if not feasible(depth):
                return
            if depth == m:
                out = {}
                for k, (den, _) in enumerate(exprs):
                    q, r = divmod(partial[k], den)
                    if r:
                        return
                    out[self.pivots[k]] = q
                for i, j in enumerate(free):
                    out[j] = values[i]
                yield out
                return
            for val in range(lo[depth], hi[depth] + 1):
                values[depth] = val
                for k, (_, coefs) in enumerate(exprs):
                    partial[k] += coefs[depth] * val
                state["w"] += wvec[depth] * val
                state["o"] += ovec[depth] * val
                yield from rec(depth + 1)
                for k, (_, coefs) in enumerate(exprs):
                    partial[k] -= coefs[depth] * val
                state["w"] -= wvec[depth] * val
                state["o"] -= ovec[depth] * val
                if state["w"] + wvec[depth] * (val + 1) + wsuf[0][depth + 1] > max_weight \
                        and wvec[depth] > 0:
                    break

        yield from rec(0)


def saddle_patterns(n: int, system: System, octagon_total: Optional[int]):
    """Per-tetrahedron saddle choice: None or a coordinate in 4..width-1."""
    choices = [None] + list(range(4, system.width))
    for pat in product(choices, repeat=n):
        if octagon_total is not None and system is System.TWO:
            octs = sum(1 for c in pat if c is not None and c >= 7)
            if octs > octagon_total:
                continue
            if octagon_total > 0 and octs == 0:
                continue
        yield pat


def _pattern_solutions(rows, n, system, pattern, max_weight, octagon_total, wcoef, order):
    width = system.width
    cols = []
    for t, choice in enumerate(pattern):
        cols.extend(t * width + p for p in range(4))
        if choice is not None:
            cols.append(t * width + choice)
    rank = {c: i for i, c in enumerate(order)}
    cols.sort(key=lambda c: rank[c])
    lower = [1 if (c % width) >= 4 else 0 for c in cols]
    upper = [int(floor(Fraction(max_weight) / wcoef[c])) for c in cols]
    octcols = {j for j, c in enumerate(cols) if c % width >= 7}
    sp = _Subproblem(rows, cols, lower, upper, [wcoef[c] for c in cols], octcols)
    for sol in sp.solutions(max_weight, octagon_total):
        flat = [0] * (width * n)
        for j, val in sol.items():
            flat[cols[j]] = val
        yield tuple(flat)


def _worker(args):
    text, system_value, patterns, max_weight, octagon_total, order = args
    tri = parse_triangulation(text)
    system = System(system_value)
    rows = matching_matrix(tri, system)
    wcoef = weight_functional(tri, system)
    out = []
    for pat in patterns:
        out.extend(_pattern_solutions(rows, tri.n, system, pat, max_weight, octagon_total,
                                      wcoef, order))
    return out


def thread_count() -> int:
    raw = os.environ.get("NORMALKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def enumerate_bounded(tri: Triangulation, system: System, max_weight: int,
                      octagon_total: Optional[int] = None,
                      order: Optional[Sequence[int]] = None,
                      workers: Optional[int] = None) -> list[CoordinateVector]:
    """All matched admissible vectors of weight at most ``max_weight``.

    The search branches on the saddle type of every tetrahedron (so only
    admissible vectors are ever generated), then runs a depth-first search over
    the free variables of the remaining linear system with interval pruning.
    ``order`` permutes the elimination/search order of the variables.
    """
    if max_weight < 0:
        raise ValueError("max_weight must be non-negative")
    if octagon_total is not None and system is System.ONE and octagon_total > 0:
        return []
    dim = system.width * tri.n
    order = list(order) if order is not None else list(range(dim))
    if sorted(order) != list(range(dim)):
        raise ValueError("order must be a permutation of the variables")
    patterns = list(saddle_patterns(tri.n, system, octagon_total))
    workers = thread_count() if workers is None else workers
    found: list[tuple[int, ...]] = []
    if workers > 1 and len(patterns) > 1:
        text = serialize_triangulation(tri)
        chunks = [patterns[i::workers] for i in range(workers)]
        jobs = [(text, system.value, c, max_weight, octagon_total, order) for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            for part in pool.map(_worker, jobs):
                found.extend(part)
    else:
        rows = matching_matrix(tri, system)
        wcoef = weight_functional(tri, system)
        for pat in patterns:
            found.extend(_pattern_solutions(rows, tri.n, system, pat, max_weight,
                                            octagon_total, wcoef, order))
    vecs = [CoordinateVector.from_flat(system, f) for f in found]
    return canonical_order(tri, vecs)


# --------------------------------------------------------------------------
# Candidate searches
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    vector: CoordinateVector
    weight: int
    chi: int
    components: int

    def to_json(self) -> dict:
        return {**self.vector.to_json(), "weight": self.weight, "chi": self.chi,
                "components": self.components}


def find_octagonal_candidates(tri: Triangulation, max_weight: int,
                              workers: Optional[int] = None) -> list[Candidate]:
    from .surfaces import build_surface, components

    out = []
    for v in enumerate_bounded(tri, System.TWO, max_weight, octagon_total=1, workers=workers):
        comps = components(build_surface(tri, v))
        out.append(Candidate(v, weight(tri, v), euler_characteristic(tri, v), len(comps)))
    return out


SPHERE_INVENTORY_NOTE = ("vertex surfaces and their sums of up to `depth` compatible "
                         "rays; one concrete finite inventory, not a proof of completeness")


def find_normal_spheres(tri: Triangulation, depth: int = 2,
                        rays: Optional[Sequence[CoordinateVector]] = None
                        ) -> list[CoordinateVector]:
    """Connected 1-normal spheres among vertex surfaces and small sums of them."""
    from .surfaces import build_surface, components

    if rays is None:
        rays = enumerate_vertex_surfaces(tri, System.ONE).rays
    rays = [r.to_system(System.ONE) for r in rays]
    seen: dict = {}
    current = {(i,): r for i, r in enumerate(rays)}
    for v in current.values():
        seen[v.flat] = v
    for _ in range(depth - 1):
        nxt = {}
        for idx, v in current.items():
            for j in range(idx[-1], len(rays)):
                w = v + rays[j]
                if is_admissible(w):
                    nxt[idx + (j,)] = w
                    seen.setdefault(w.flat, w)
        current = nxt
    spheres = []
    for v in seen.values():
        if euler_characteristic(tri, v) != 2:
            continue
        comps = components(build_surface(tri, v))
        if len(comps) == 1:
            spheres.append(v)
    result = canonical_order(tri, spheres)
    for link in vertex_links(tri):
        if link.flat not in {s.flat for s in result}:
            raise AssertionError("vertex link missing from sphere inventory")
    return result
