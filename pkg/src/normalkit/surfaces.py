"""Explicit surfaces built from coordinate vectors, and their components."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .coords import (AXES, CoordinateVector, PieceType, edge_corner_counts, is_admissible,
                     piece_arcs, vertex_links)
from .triangulation import EDGES, Triangulation, edge_index, face_vertices


class AdmissibilityError(ValueError):
    """Pieces of the vector cannot be realised disjointly."""


@dataclass(frozen=True)
class Arc:
    face: int  # face class
    cut: int  # vertex cut off, in side-1 labels
    index: int  # 1-based, counted from the cut-off vertex
    corners: tuple[int, int]
    # face-local endpoints: (vertex pair of the side, position from the cut-off vertex)
    ends: tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class Piece:
    tet: int
    coord: int
    copy: int  # 1-based parallel index
    arcs: tuple[int, ...]  # boundary cycle
    corners: tuple[int, ...]  # corner after each arc of the cycle
    # per cycle step: (face-class side the arc is seen from, entry vertex in side-1 labels)
    entries: tuple[tuple[int, int], ...] = ()

    @property
    def type(self) -> PieceType:
        return PieceType.from_coord(self.coord)


@dataclass
class SurfaceComplex:
    tri: Triangulation
    vector: CoordinateVector
    corners: list[tuple[int, int]]  # (edge class, position along the class orientation)
    arcs: list[Arc]
    pieces: list[Piece]
    arc_pieces: list[tuple[int, int]]  # arc -> (piece on side 1, piece on side 2)

    @property
    def weight(self) -> int:
        return len(self.corners)


def _saddle(row: Sequence[int]) -> Optional[int]:
    used = [p for p in range(4, len(row)) if row[p]]
    if len(used) > 1:
        raise AdmissibilityError("two saddle types in one tetrahedron")
    return used[0] if used else None


def owning_piece(row: Sequence[int], face: int, cut: int, index: int) -> tuple[int, int]:
    """``(coord, copy)`` of the piece whose arc cutting off ``cut`` sits at ``index``."""
    if index <= row[cut]:
        return cut, index
    s = _saddle(row)
    if s is None or cut not in piece_arcs(s, face):
        raise AdmissibilityError("arc without a piece")
    j = index - row[cut]
    k = row[s]
    if j > k:
        raise AdmissibilityError("arc index beyond piece count")
    on_a = cut in AXES[(s - 4) % 3][0]
    return s, (j if on_a else k + 1 - j)


def face_arc_count(row: Sequence[int], face: int, cut: int) -> int:
    return sum(c for p, c in enumerate(row) if c and cut in piece_arcs(p, face))


def build_surface(tri: Triangulation, v: CoordinateVector) -> SurfaceComplex:
    """Realise ``v`` as disjoint pieces with explicit corners, arcs and gluings."""
    if not is_admissible(v, strict=True):
        raise AdmissibilityError("vector is not admissible: two saddle types share a tetrahedron")
    sk = tri.skeleton
    if sk.reversed_edges:
        raise ValueError("triangulation has an edge identified with itself in reverse")
    counts = edge_corner_counts(tri, v)
    corners = []
    corner_id = {}
    for e, w in enumerate(counts):
        for pos in range(w):
            corner_id[(e, pos)] = len(corners)
            corners.append((e, pos))

    def class_corner(t: int, a: int, b: int, k: int) -> int:
        """Corner at distance ``k`` (0-based) from local vertex ``a`` on edge ``ab`` of ``t``."""
        e = edge_index(a, b)
        ec = sk.edge_of[(t, e)]
        tail, _ = sk.edge_tail_head(t, e)
        pos = k if a == tail else counts[ec] - 1 - k
        return corner_id[(ec, pos)]

    arcs: list[Arc] = []
    arc_id = {}
    for fc in sk.face_classes:
        row = v.counts[fc.tet1]
        for u in fc.vertices:
            x, y = (w for w in fc.vertices if w != u)
            for i in range(1, face_arc_count(row, fc.face1, u) + 1):
                ends = ((min(u, x), max(u, x)), i - 1), ((min(u, y), max(u, y)), i - 1)
                cs = (class_corner(fc.tet1, u, x, i - 1), class_corner(fc.tet1, u, y, i - 1))
                arc_id[(fc.index, u, i)] = len(arcs)
                arcs.append(Arc(fc.index, u, i, cs, ends))

    pieces: list[Piece] = []
    arc_pieces: list[list[int]] = [[-1, -1] for _ in arcs]
    for t in range(tri.n):
        row = v.counts[t]
        members: dict = {}
        for f in range(4):
            fi, side = sk.face_of[(t, f)]
            fc = sk.face_classes[fi]
            for u in face_vertices(f):
                u1 = u if side == 1 else fc.perm.index(u)
                for i in range(1, face_arc_count(row, f, u) + 1):
                    members.setdefault(owning_piece(row, f, u, i), []).append(
                        (f, u, i, arc_id[(fi, u1, i)], side))
        for p in range(len(row)):
            for c in range(1, row[p] + 1):
                steps = _boundary_cycle(tri, t, members.get((p, c), []), class_corner, counts)
                pid = len(pieces)
                for a, side, _ in steps[0]:
                    if arc_pieces[a][side - 1] != -1:
                        raise AssertionError("arc side assigned twice")
                    arc_pieces[a][side - 1] = pid
                pieces.append(Piece(t, p, c, tuple(a for a, _, _ in steps[0]), steps[1],
                                    tuple((s, e) for _, s, e in steps[0])))
    if any(-1 in ap for ap in arc_pieces):
        raise AssertionError("arc missing a piece")
    return SurfaceComplex(tri, v, corners, arcs, pieces, [tuple(ap) for ap in arc_pieces])


def _boundary_cycle(tri, t, members, class_corner, counts):
    """Order a piece's arcs into its boundary cycle through corner appearances.

    A corner appearance is (local edge, distance from the lower vertex); each
    one is shared by the piece's arcs in the two faces of ``t`` on that edge.
    """
    sk = tri.skeleton
    ends_of = []
    at: dict = {}
    for f, u, i, a, side in members:
        apps = []
        for w in face_vertices(f):
            if w == u:
                continue
            e = edge_index(u, w)
            total = counts[sk.edge_of[(t, e)]]
            apps.append(((e, i - 1 if u < w else total - i), w))
        ends_of.append((a, side, f, apps))
        for ap, _ in apps:
            at.setdefault(ap, []).append(len(ends_of) - 1)
    if not ends_of:
        return (), ()
    for ap, who in at.items():
        if len(who) != 2:
            raise AssertionError(f"corner appearance {ap} bounds {len(who)} arcs of one piece")
    steps, corners = [], []
    cur, entry = 0, 0  # enter the first arc at its first listed end
    while True:
        a, side, f, apps = ends_of[cur]
        w_in = apps[entry][1]
        fc = sk.face_classes[sk.face_of[(t, f)][0]]
        steps.append((a, side, w_in if side == 1 else fc.perm.index(w_in)))
        out_app = apps[1 - entry][0]
        e, dist = out_app
        lo, hi = EDGES[e]
        corners.append(class_corner(t, lo, hi, dist))
        nxt = [j for j in at[out_app] if j != cur][0]
        if nxt == 0:
            break
        entry = 0 if ends_of[nxt][3][0][0] == out_app else 1
        cur = nxt
        if len(steps) > len(ends_of):
            raise AssertionError("boundary traversal does not close")
    if len(steps) != len(ends_of):
        raise AssertionError("piece boundary is not a single cycle")
    return tuple(steps), tuple(corners)


# --------------------------------------------------------------------------
# Components
# --------------------------------------------------------------------------

PIECE_SIZES = {"tri": 3, "quad": 4, "oct": 8}


@dataclass(frozen=True)
class ComponentReport:
    component_id: int
    coords: CoordinateVector
    chi: int
    orientable: bool
    two_sided: bool
    genus: Optional[int]
    is_vertex_link: bool
    pattern: tuple[frozenset, ...]

    def to_json(self) -> dict:
        return {
            "componentId": self.component_id,
            "coords": self.coords.to_json(),
            "chi": self.chi,
            "orientable": self.orientable,
            "twoSided": self.two_sided,
            "genus": self.genus,
            "isVertexLink": self.is_vertex_link,
            "pattern": [sorted(str(PieceType.from_coord(p)) for p in s) for s in self.pattern],
        }


class _ParityUF:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.par = [0] * n
        self.ok = [True] * n

    def find(self, x: int) -> tuple[int, int]:
        p = 0
        root = x
        while self.parent[root] != root:
            p ^= self.par[root]
            root = self.parent[root]
        # path compression
        cur, acc = x, p
        while self.parent[cur] != root and self.parent[cur] != cur:
            nxt = self.parent[cur]
            nacc = acc ^ self.par[cur]
            self.parent[cur] = root
            self.par[cur] = acc
            cur, acc = nxt, nacc
        return root, p

    def union(self, a: int, b: int, parity: int) -> None:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            if pa ^ pb != parity:
                self.ok[ra] = False
            return
        if rb < ra:
            ra, rb, pa, pb = rb, ra, pb, pa
        self.parent[rb] = ra
        self.par[rb] = pa ^ pb ^ parity
        self.ok[ra] = self.ok[ra] and self.ok[rb]


def components(sc: SurfaceComplex) -> list[ComponentReport]:
    tri = sc.tri
    sk = tri.skeleton
    np_ = len(sc.pieces)
    orient = _ParityUF(np_)
    sides = _ParityUF(np_)
    for a, (p1, p2) in enumerate(sc.arc_pieces):
        arc = sc.arcs[a]
        # intrinsic orientation: shared arcs are run in opposite directions
        d1 = _local_direction(sc, p1, a, 1)
        d2 = _local_direction(sc, p2, a, 2)
        orient.union(p1, p2, 0 if d1 != d2 else 1)
        # transverse orientation: normals point towards the cut-off vertex or away
        fc = sk.face_classes[arc.face]
        n1 = _normal_towards_cut(sc.pieces[p1], arc.cut)
        n2 = _normal_towards_cut(sc.pieces[p2], fc.perm[arc.cut])
        sides.union(p1, p2, 0 if n1 == n2 else 1)
    groups: dict[int, list[int]] = {}
    for p in range(np_):
        groups.setdefault(orient.find(p)[0], []).append(p)
    # components by minimal piece index, so ids are deterministic
    comp_of = {}
    ordered = sorted(groups.values(), key=lambda g: g[0])
    links = {l.flat: True for l in vertex_links(tri, sc.vector.system)}
    reports = []
    for cid, members in enumerate(ordered):
        for p in members:
            comp_of[p] = cid
        rows = [[0] * sc.vector.system.width for _ in range(tri.n)]
        for p in members:
            pc = sc.pieces[p]
            rows[pc.tet][pc.coord] += 1
        cv = CoordinateVector(sc.vector.system, tuple(tuple(r) for r in rows))
        arc_set = {a for p in members for a in sc.pieces[p].arcs}
        corner_set = {c for p in members for c in sc.pieces[p].corners}
        chi = len(corner_set) - len(arc_set) + len(members)
        root = orient.find(members[0])[0]
        srt = sides.find(members[0])[0]
        orientable = orient.ok[root]
        genus = (2 - chi) // 2 if orientable else None
        pattern = tuple(frozenset(p for p, c in enumerate(r) if c) for r in rows)
        reports.append(ComponentReport(cid, cv, chi, orientable, sides.ok[srt], genus,
                                       cv.flat in links, pattern))
    return reports


def _local_direction(sc: SurfaceComplex, piece: int, arc: int, side: int) -> int:
    """+1 if the piece's boundary cycle enters ``arc`` at its lower side-1 end vertex."""
    pc = sc.pieces[piece]
    for a, (s, entry) in zip(pc.arcs, pc.entries):
        if a == arc and s == side:
            cut = sc.arcs[arc].cut
            return 1 if entry == min(w for w in range(4) if w != cut and w != _missing(sc, arc)) else -1
    raise AssertionError("piece does not meet arc")


def _missing(sc: SurfaceComplex, arc: int) -> int:
    fc = sc.tri.skeleton.face_classes[sc.arcs[arc].face]
    return fc.face1


def _normal_towards_cut(piece: Piece, cut: int) -> bool:
    """Whether the piece's reference normal points into the cut-off corner region."""
    pt = piece.type
    if pt.kind == "tri":
        return True
    return cut in AXES[pt.index][0]


def component_count(sc: SurfaceComplex) -> int:
    return len(components(sc))


def kneser_check(reports: Sequence[ComponentReport], n: int) -> list[list[int]]:
    """Components sharing a pattern, for every pattern used at least twice."""
    groups: dict = {}
    for r in reports:
        groups.setdefault(r.pattern, []).append(r.component_id)
    dup = sorted((sorted(g) for g in groups.values() if len(g) > 1), key=lambda g: (g[0], len(g)))
    if len(reports) > 20 * n and not dup:
        raise AssertionError("more than 20n components but no repeated pattern")
    return dup


def analyze(tri: Triangulation, v: CoordinateVector) -> list[ComponentReport]:
    return components(build_surface(tri, v))
