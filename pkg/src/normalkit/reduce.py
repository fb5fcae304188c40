"""Surfaces presented by their trace on the 2-skeleton, and reductions on them.

A :class:`CurveSystem` keeps, for every edge class, the ordered points where
the surface meets it; for every face class, the chords (arcs between boundary
points) and circles of the surface inside that face; and for every
tetrahedron, abstract piece labels carrying an Euler characteristic.  Piece
boundary curves on a tetrahedron are not stored; they are traced on demand by
following chords across tetrahedron edges.

Face boundaries are read in side-1 labels ``(a, b, c)`` of the face class as
the cycle ``corner a, side a->b, corner b, side b->c, corner c, side c->a``.
A chord endpoint is ``(side, point id)``.  The gap after a mark (a corner or
an endpoint) names a stretch of the face boundary; the regions of a face are
orbits of gaps.

Co-orientation: each point records whether the upper side of the surface
lies towards the head of its edge class.  It is derived either from vertex
parity (vertex class 0 on the lower side), or by propagation along chords; it
is ``None`` on one-sided components.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .coords import CoordinateVector, System, piece_corners
from .surfaces import build_surface
from .triangulation import EDGES, Triangulation, edge_index, face_vertices

CORNER = -1
UPPER, LOWER = "upper", "lower"

Mark = tuple[int, int]  # (side, point id) or (CORNER, corner index)
Loc = tuple[str, object]  # ("gap", mark) or ("in", parent circle id)


class CurveSystemError(ValueError):
    """An operation was asked to do something the arrangement does not allow."""


class StaleDiscError(CurveSystemError):
    pass


# --------------------------------------------------------------------------
# Static incidence data of a triangulation
# --------------------------------------------------------------------------


class Frame:
    """Face sides, edge incidences and wedges of a triangulation."""

    def __init__(self, tri: Triangulation):
        sk = tri.skeleton
        self.tri = tri
        self.nfaces = len(sk.face_classes)
        self.side_edge: list[tuple[int, int, int]] = []
        self.side_fwd: list[tuple[bool, bool, bool]] = []
        self.incidences: dict[int, list[tuple[int, int]]] = {e: [] for e in range(len(sk.edge_classes))}
        # (face, side, slot) -> (tet, local edge, face', side', slot')
        self.link: dict[tuple[int, int, int], tuple[int, int, int, int, int]] = {}
        self.wedges: dict[int, list[tuple[int, int, tuple[int, int, int], tuple[int, int, int]]]] = {
            e: [] for e in range(len(sk.edge_classes))}
        for fc in sk.face_classes:
            vs = fc.vertices
            es, fw = [], []
            for j in range(3):
                a, b = vs[j], vs[(j + 1) % 3]
                e = edge_index(a, b)
                es.append(sk.edge_of[(fc.tet1, e)])
                fw.append(sk.edge_tail_head(fc.tet1, e)[0] == a)
                self.incidences[es[-1]].append((fc.index, j))
            self.side_edge.append(tuple(es))  # type: ignore[arg-type]
            self.side_fwd.append(tuple(fw))  # type: ignore[arg-type]
        for t in range(tri.n):
            for el, (a, b) in enumerate(EDGES):
                f1, f2 = (f for f in range(4) if f not in (a, b))
                i1 = self._incidence(t, f1, a, b)
                i2 = self._incidence(t, f2, a, b)
                self.link[i1] = (t, el) + i2
                self.link[i2] = (t, el) + i1
                self.wedges[sk.edge_of[(t, el)]].append((t, el, i1, i2))

    def _incidence(self, t: int, f: int, a: int, b: int) -> tuple[int, int, int]:
        sk = self.tri.skeleton
        fi, slot = sk.face_of[(t, f)]
        fc = sk.face_classes[fi]
        if slot == 2:
            a, b = fc.perm.index(a), fc.perm.index(b)
        vs = fc.vertices
        for j in range(3):
            if {vs[j], vs[(j + 1) % 3]} == {a, b}:
                return fi, j, slot
        raise AssertionError("edge not on face")

    def slot_tet(self, face: int, slot: int) -> int:
        fc = self.tri.skeleton.face_classes[face]
        return fc.tet1 if slot == 1 else fc.tet2


# --------------------------------------------------------------------------
# The curve system value
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Circle:
    loc: Loc
    upper_inside: Optional[bool]
    pieces: tuple[int, int]


@dataclass
class CurveSystem:
    tri: Triangulation
    system: System
    frame: Frame = field(repr=False)
    points: dict[int, tuple[int, ...]]
    upper: dict[int, Optional[bool]]
    chords: dict[int, dict[int, tuple[Mark, Mark]]]
    chord_pieces: dict[tuple[int, int], tuple[int, int]]
    circles: dict[int, dict[int, Circle]]
    pieces: dict[int, tuple[int, int]]  # id -> (tet, chi)
    co_mode: Optional[str] = None

    def copy(self) -> "CurveSystem":
        return CurveSystem(self.tri, self.system, self.frame, dict(self.points), dict(self.upper),
                           {f: dict(c) for f, c in self.chords.items()}, dict(self.chord_pieces),
                           {f: dict(c) for f, c in self.circles.items()}, dict(self.pieces), self.co_mode)

    @property
    def weight(self) -> int:
        return sum(len(p) for p in self.points.values())

    # face geometry ---------------------------------------------------------

    def side_points(self, face: int, side: int) -> tuple[int, ...]:
        pts = self.points[self.frame.side_edge[face][side]]
        return pts if self.frame.side_fwd[face][side] else tuple(reversed(pts))

    def cycle(self, face: int) -> list[Mark]:
        marks: list[Mark] = []
        for j in range(3):
            marks.append((CORNER, j))
            marks.extend((j, p) for p in self.side_points(face, j))
        return marks

    def partner(self, face: int) -> dict[Mark, Mark]:
        out = {}
        for a, b in self.chords[face].values():
            out[a] = b
            out[b] = a
        return out

    def chord_at(self, face: int) -> dict[Mark, int]:
        out = {}
        for cid, (a, b) in self.chords[face].items():
            out[a] = cid
            out[b] = cid
        return out

    def regions(self, face: int) -> tuple[list[Mark], list[int], list[list[int]]]:
        """``(cycle, region of each gap, gaps of each region in boundary order)``."""
        cyc = self.cycle(face)
        index = {m: i for i, m in enumerate(cyc)}
        part = self.partner(face)
        n = len(cyc)
        region = [-1] * n
        orbits: list[list[int]] = []
        for start in range(n):
            if region[start] != -1:
                continue
            orbit = []
            g = start
            while region[g] == -1:
                region[g] = len(orbits)
                orbit.append(g)
                m = (g + 1) % n
                g = m if cyc[m][0] == CORNER else index[part[cyc[m]]]
            orbits.append(orbit)
        return cyc, region, orbits

    def after_is_upper(self, face: int, mark: Mark) -> Optional[bool]:
        """Whether the gap following the endpoint ``mark`` lies on the upper side."""
        j, pid = mark
        bit = self.upper.get(pid)
        if bit is None:
            return None
        return bit == self.frame.side_fwd[face][j]

    def gap_label(self, face: int, cyc: list[Mark], g: int) -> Optional[bool]:
        if cyc[g][0] != CORNER:
            return self.after_is_upper(face, cyc[g])
        nxt = cyc[(g + 1) % len(cyc)]
        if nxt[0] != CORNER:
            lab = self.after_is_upper(face, nxt)
            return None if lab is None else not lab
        return None

    # tetrahedron boundary curves -------------------------------------------

    def curves(self, tet: int) -> list[tuple[list[tuple[str, int, int, int]], list[int]]]:
        """Closed curves on the boundary of ``tet``.

        Each curve is ``(nodes, crossings)`` where a node is
        ``(kind, face, id, slot)`` with kind ``"chord"`` or ``"circle"`` and
        ``crossings[e]`` counts passages through local edge ``e``.
        """
        fr = self.frame
        nodes = []
        for f in range(fr.nfaces):
            for s in (1, 2):
                if fr.slot_tet(f, s) != tet:
                    continue
                nodes.extend(("chord", f, c, s) for c in sorted(self.chords[f]))
        at = {f: self.chord_at(f) for f in range(fr.nfaces)}
        seen = set()
        out = []
        for node in nodes:
            if node in seen:
                continue
            _, f, c, s = node
            curve = []
            cross = [0] * 6
            enter = self.chords[f][c][0]
            cur = node
            while True:
                if cur in seen:
                    raise CurveSystemError("curve tracing revisited a chord side")
                seen.add(cur)
                curve.append(cur)
                _, f, c, s = cur
                a, b = self.chords[f][c]
                leave = b if enter == a else a
                j, pid = leave
                _, el, f2, j2, s2 = fr.link[(f, j, s)]
                cross[el] += 1
                enter = (j2, pid)
                cur = ("chord", f2, at[f2][enter], s2)
                if cur == node:
                    if enter != self.chords[f2][at[f2][enter]][0]:
                        raise CurveSystemError("curve closed through the wrong end")
                    break
            out.append((curve, cross))
        for f in range(fr.nfaces):
            for s in (1, 2):
                if fr.slot_tet(f, s) == tet:
                    out.extend(([("circle", f, c, s)], [0] * 6) for c in sorted(self.circles[f]))
        return out

    def node_piece(self, node: tuple[str, int, int, int]) -> int:
        kind, f, c, s = node
        if kind == "chord":
            return self.chord_pieces[(f, c)][s - 1]
        return self.circles[f][c].pieces[s - 1]

    def piece_labels(self) -> dict[int, dict]:
        """Per piece: tetrahedron, Euler characteristic, boundary curves and genus."""
        bcount = {p: 0 for p in self.pieces}
        for t in range(self.tri.n):
            for curve, _ in self.curves(t):
                bcount[self.node_piece(curve[0])] += 1
        out = {}
        for p, (t, chi) in sorted(self.pieces.items()):
            b = bcount[p]
            g2 = 2 - chi - b
            out[p] = {"tet": t, "chi": chi, "boundary": b,
                      "genus": g2 // 2 if g2 >= 0 and g2 % 2 == 0 else None}
        return out

    def to_json(self) -> dict:
        faces = []
        for f in range(self.frame.nfaces):
            faces.append({
                "face": f,
                "chords": [{"id": c, "ends": [list(a), list(b)],
                            "pieces": list(self.chord_pieces[(f, c)])}
                           for c, (a, b) in sorted(self.chords[f].items())],
                "circles": [{"id": c, "loc": [ci.loc[0], list(ci.loc[1]) if ci.loc[0] == "gap" else ci.loc[1]],
                             "upperInside": ci.upper_inside, "pieces": list(ci.pieces)}
                            for c, ci in sorted(self.circles[f].items())],
            })
        return {
            "weight": self.weight,
            "points": {str(e): list(p) for e, p in sorted(self.points.items())},
            "faces": faces,
            "pieces": {str(p): v for p, v in self.piece_labels().items()},
            "coOrientation": self.co_mode,
        }


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------


def from_coordinates(tri: Triangulation, v: CoordinateVector) -> CurveSystem:
    sc = build_surface(tri, v)
    frame = Frame(tri)
    sk = tri.skeleton
    points = {e: [] for e in range(len(sk.edge_classes))}
    for pid, (e, _) in enumerate(sc.corners):
        points[e].append(pid)
    chords = {f: {} for f in range(frame.nfaces)}
    chord_pieces = {}
    for a, arc in enumerate(sc.arcs):
        fc = sk.face_classes[arc.face]
        vs = fc.vertices
        ends = []
        for ((lo, hi), _), pid in zip(arc.ends, arc.corners):
            j = next(j for j in range(3) if {vs[j], vs[(j + 1) % 3]} == {lo, hi})
            ends.append((j, pid))
        cid = len(chords[arc.face])
        chords[arc.face][cid] = (ends[0], ends[1])
        chord_pieces[(arc.face, cid)] = sc.arc_pieces[a]
    pieces = {i: (p.tet, 1) for i, p in enumerate(sc.pieces)}
    cs = CurveSystem(tri, v.system, frame, {e: tuple(p) for e, p in points.items()},
                     {}, chords, chord_pieces, {f: {} for f in range(frame.nfaces)}, pieces)
    for f, fchords in chords.items():
        index = {m: i for i, m in enumerate(cs.cycle(f))}
        for cid, ends in fchords.items():
            fchords[cid] = tuple(sorted(ends, key=index.get))
    _co_orient(cs)
    return cs


def _co_orient(cs: CurveSystem) -> None:
    if _parity_co_orientation(cs):
        cs.co_mode = "parity"
        return
    cs.co_mode = _local_co_orientation(cs)


def _parity_co_orientation(cs: CurveSystem) -> bool:
    sk = cs.tri.skeleton
    if not sk.vertex_classes:
        return False
    label = {0: 0}
    ends = {}
    for e, cls in enumerate(sk.edge_classes):
        t, el = cls[0]
        tail, head = sk.edge_tail_head(t, el)
        ends[e] = (sk.vertex_of[(t, tail)], sk.vertex_of[(t, head)])
    changed = True
    while changed:
        changed = False
        for e, (a, b) in ends.items():
            w = len(cs.points[e]) & 1
            if a in label and b not in label:
                label[b] = label[a] ^ w
                changed = True
            elif b in label and a not in label:
                label[a] = label[b] ^ w
                changed = True
            elif a in label and label[b] != label[a] ^ w:
                return False
    if len(label) != len(sk.vertex_classes):
        return False
    upper = {}
    for e, pts in cs.points.items():
        tail_label = label[ends[e][0]]
        for k, pid in enumerate(pts):
            upper[pid] = (tail_label ^ ((k + 1) & 1)) == 1
    cs.upper = upper
    return all(_chord_consistent(cs, f, a, b) for f in cs.chords for a, b in cs.chords[f].values())


def _chord_consistent(cs: CurveSystem, face: int, a: Mark, b: Mark) -> bool:
    la, lb = cs.after_is_upper(face, a), cs.after_is_upper(face, b)
    return la is None or lb is None or la != lb


def _local_co_orientation(cs: CurveSystem) -> Optional[str]:
    fr = cs.frame
    adj: dict[int, list[tuple[int, bool, bool]]] = {p: [] for pts in cs.points.values() for p in pts}
    for f in range(fr.nfaces):
        for (ja, pa), (jb, pb) in cs.chords[f].values():
            fa, fb = fr.side_fwd[f][ja], fr.side_fwd[f][jb]
            adj[pa].append((pb, fa, fb))
            adj[pb].append((pa, fb, fa))
    upper: dict[int, Optional[bool]] = {}
    any_one_sided = False
    for start in sorted(adj):
        if start in upper:
            continue
        comp = [start]
        upper[start] = True
        ok = True
        i = 0
        while i < len(comp):
            x = comp[i]
            i += 1
            for y, fx, fy in adj[x]:
                want = (not fy) if upper[x] == fx else fy
                if y not in upper:
                    upper[y] = want
                    comp.append(y)
                elif upper[y] != want:
                    ok = False
        if not ok:
            any_one_sided = True
            for x in comp:
                upper[x] = None
    cs.upper = upper
    return None if any_one_sided else "local"


# --------------------------------------------------------------------------
# Tubes
# --------------------------------------------------------------------------


def _merge_pieces(cs: CurveSystem, a: int, b: int, chi: int) -> int:
    """Replace pieces ``a`` and ``b`` by one piece of characteristic ``chi``."""
    keep, gone = min(a, b), max(a, b)
    cs.pieces[keep] = (cs.pieces[keep][0], chi)
    if gone != keep:
        del cs.pieces[gone]
        _rename_pieces(cs, {gone: keep})
    return keep


def _rename_pieces(cs: CurveSystem, mapping: dict[int, int]) -> None:
    if not mapping:
        return
    for k, (p1, p2) in cs.chord_pieces.items():
        cs.chord_pieces[k] = (mapping.get(p1, p1), mapping.get(p2, p2))
    for f, cl in cs.circles.items():
        for c, ci in cl.items():
            p1, p2 = ci.pieces
            cl[c] = Circle(ci.loc, ci.upper_inside, (mapping.get(p1, p1), mapping.get(p2, p2)))


def tube_in_tet(cs: CurveSystem, tet: int, piece_a: int, piece_b: int) -> CurveSystem:
    if piece_a == piece_b:
        raise CurveSystemError("tube needs two different pieces")
    for p in (piece_a, piece_b):
        if p not in cs.pieces:
            raise CurveSystemError(f"no piece {p}")
        if cs.pieces[p][0] != tet:
            raise CurveSystemError("pieces not in the same tetrahedron")
    out = cs.copy()
    _merge_pieces(out, piece_a, piece_b, cs.pieces[piece_a][1] + cs.pieces[piece_b][1] - 2)
    return out


def parse_corridor(code: Union[str, Sequence[int]]) -> tuple[int, ...]:
    if not isinstance(code, str):
        return tuple(int(c) for c in code)
    code = code.strip()
    if code in ("direct", ""):
        return ()
    out = []
    for tok in code.split(","):
        tok = tok.strip()
        if not tok.startswith("c") or not tok[1:].isdigit():
            raise CurveSystemError(f"bad corridor code {code!r}")
        out.append(int(tok[1:]))
    return tuple(out)


def _surface_component(cs: CurveSystem, pid: int) -> tuple[set[int], set[tuple[int, int]]]:
    """Points and circles on the surface component through point ``pid``.

    Components are joined through chords and through shared pieces.
    """
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for f in range(cs.frame.nfaces):
        for c, ((_, a), (_, b)) in cs.chords[f].items():
            p1, p2 = cs.chord_pieces[(f, c)]
            for x in (("pt", b), ("pc", p1), ("pc", p2)):
                union(("pt", a), x)
        for c, ci in cs.circles[f].items():
            union(("ci", f, c), ("pc", ci.pieces[0]))
            union(("ci", f, c), ("pc", ci.pieces[1]))
    root = find(("pt", pid))
    points = {k[1] for k in parent if k[0] == "pt" and find(k) == root}
    circles = {(k[1], k[2]) for k in parent if k[0] == "ci" and find(k) == root}
    return points, circles


def _top_circles(cs: CurveSystem, face: int, cyc: list[Mark], gaps: Iterable[int]) -> list[int]:
    marks = {cyc[g] for g in gaps}
    return sorted(c for c, ci in cs.circles[face].items() if ci.loc[0] == "gap" and ci.loc[1] in marks)


def tube_in_face(cs: CurveSystem, face: int, arc_a: int, arc_b: int,
                 corridor: Union[str, Sequence[int]] = "direct") -> CurveSystem:
    """Attach a tube along a corridor in ``face`` joining chords ``arc_a`` and ``arc_b``.

    The corridor runs through the region both chords border.  Its code is
    ``direct`` or a list ``c<i>,...`` of circles of that region to leave on
    the side containing the first endpoint of ``arc_a``.
    """
    chords = cs.chords[face]
    if arc_a == arc_b or arc_a not in chords or arc_b not in chords:
        raise CurveSystemError("tube needs two different chords of the face")
    keep_side = parse_corridor(corridor)
    cyc, region, orbits = cs.regions(face)
    index = {m: i for i, m in enumerate(cyc)}
    n = len(cyc)

    def sides_of(cid: int) -> set[int]:
        a, _ = chords[cid]
        return {region[index[a]], region[(index[a] - 1) % n]}

    common = sides_of(arc_a) & sides_of(arc_b)
    if len(common) != 1:
        raise CurveSystemError("corridor crosses an arrangement element")
    r = common.pop()
    orbit = orbits[r]
    part = cs.partner(face)
    # walk the region boundary: each step arrives at a mark and departs from its partner
    arrivals = []
    for g in orbit:
        m = cyc[(g + 1) % n]
        if m[0] != CORNER:
            arrivals.append((m, part[m]))
    by_chord = {}
    for arr, dep in arrivals:
        by_chord[cs.chord_at(face)[arr]] = (arr, dep)
    ax, ay = by_chord[arc_a]
    bx, by = by_chord[arc_b]
    # gaps of the two halves: after a_y up to b_x, and after b_y up to a_x
    start = orbit.index(index[ay])
    rot = orbit[start:] + orbit[:start]
    cut = next(i for i, g in enumerate(rot) if g == index[by])
    half1, half2 = rot[:cut], rot[cut:]
    tops = _top_circles(cs, face, cyc, orbit)
    for c in keep_side:
        if c not in tops:
            raise CurveSystemError("corridor crosses an arrangement element")
    first = chords[arc_a][0]
    first_half, other_half = (half1, half2) if first == ay else (half2, half1)
    out = cs.copy()
    # the tube joins the sides of A and B facing R; make those agree
    lab_a = cs.after_is_upper(face, ay)
    lab_b = cs.after_is_upper(face, by)
    # joining opposite sides of one connected surface makes it one-sided
    same = lab_a is not None and lab_b is not None and ay[1] in _surface_component(cs, by[1])[0]
    if lab_a is None or lab_b is None or (same and lab_a != lab_b):
        for comp in (_surface_component(cs, ay[1]), _surface_component(cs, by[1])):
            for pid in comp[0]:
                out.upper[pid] = None
            for f, c in comp[1]:
                ci = out.circles[f][c]
                out.circles[f][c] = Circle(ci.loc, None, ci.pieces)
        out.co_mode = None
    elif lab_a != lab_b:
        pts, circs = _surface_component(cs, by[1])
        for pid in pts:
            out.upper[pid] = not out.upper[pid]
        for f, c in circs:
            ci = out.circles[f][c]
            out.circles[f][c] = Circle(ci.loc, None if ci.upper_inside is None else not ci.upper_inside,
                                       ci.pieces)
        out.co_mode = "local"
    circ = out.circles[face]
    for c in tops:
        target = first_half if c in keep_side else other_half
        ci = circ[c]
        circ[c] = Circle(("gap", cyc[target[0]]), ci.upper_inside, ci.pieces)
    pa, pb = cs.chord_pieces[(face, arc_a)], cs.chord_pieces[(face, arc_b)]
    names: dict[int, int] = {}

    def now(x: int) -> int:
        while x in names:
            x = names[x]
        return x

    for s in (0, 1):  # a band in each adjacent tetrahedron
        x, y = now(pa[s]), now(pb[s])
        chi = out.pieces[x][1] - 1 if x == y else out.pieces[x][1] + out.pieces[y][1] - 1
        keep = _merge_pieces(out, x, y, chi)
        if x != y:
            names[max(x, y)] = keep
    del out.chords[face][arc_a], out.chords[face][arc_b]
    del out.chord_pieces[(face, arc_a)], out.chord_pieces[(face, arc_b)]
    nxt = max(chords) + 1
    for k, (e1, e2) in enumerate(((ay, bx), (by, ax))):
        out.chords[face][nxt + k] = tuple(sorted((e1, e2), key=index.get))
        out.chord_pieces[(face, nxt + k)] = (now(pa[0]), now(pa[1]))
    return out


# --------------------------------------------------------------------------
# Returns and discs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class T2Disc:
    face: int
    chord: int
    edge_side: int  # face side carrying the string
    points: tuple[int, int]  # string endpoints in face boundary order
    side: Optional[str]
    strict: bool

    def to_json(self) -> dict:
        return {"face": self.face, "chord": self.chord, "edgeSide": self.edge_side,
                "points": list(self.points), "side": self.side, "strict": self.strict}


def find_returns(cs: CurveSystem) -> list[tuple[int, int]]:
    return [(f, c) for f in range(cs.frame.nfaces) for c, (a, b) in sorted(cs.chords[f].items())
            if a[0] == b[0]]


def _disc_of(cs: CurveSystem, face: int, cid: int, cyc=None) -> T2Disc:
    a, b = cs.chords[face][cid]
    if cyc is None:
        cyc = cs.cycle(face)
    index = {m: i for i, m in enumerate(cyc)}
    first, second = sorted((a, b), key=index.get)
    lo, hi = index[first], index[second]
    innermost = hi == lo + 1
    strict = innermost and not _top_circles(cs, face, cyc, [lo])
    lab = cs.after_is_upper(face, first)
    side = None if lab is None else (UPPER if lab else LOWER)
    return T2Disc(face, cid, a[0], (first[1], second[1]), side, strict)


def find_t2_discs(cs: CurveSystem, side: Optional[str] = None) -> list[T2Disc]:
    """Discs cut off by returns, optionally only those on ``side``."""
    out = []
    cycles = {}
    for f, c in find_returns(cs):
        if f not in cycles:
            cycles[f] = cs.cycle(f)
        d = _disc_of(cs, f, c, cycles[f])
        if side is None or d.side == side:
            out.append(d)
    return out


def _disc_key(cs: CurveSystem, d: T2Disc) -> tuple:
    pts = cs.side_points(d.face, d.edge_side)
    return (d.face, d.edge_side, pts.index(d.points[0]))


# --------------------------------------------------------------------------
# Elementary reduction
# --------------------------------------------------------------------------


def elementary_reduction(cs: CurveSystem, d: T2Disc) -> CurveSystem:
    """Isotope the surface across the strict disc ``d``, removing two edge points."""
    f0, j0 = d.face, d.edge_side
    p, q = d.points
    if d.chord not in cs.chords[f0] or set(cs.chords[f0][d.chord]) != {(j0, p), (j0, q)}:
        raise StaleDiscError("stale disc (arrangement changed)")
    if _disc_of(cs, f0, d.chord) != d:
        raise StaleDiscError("stale disc (arrangement changed)")
    if not d.strict:
        raise CurveSystemError("disc is not strict")
    fr = cs.frame
    e = fr.side_edge[f0][j0]
    out = cs.copy()

    # pieces: bands in wedges away from the disc, caps in a wedge bounded by it twice
    parent = {x: x for x in cs.pieces}
    chi = {x: c for x, (_, c) in cs.pieces.items()}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    at = {f: cs.chord_at(f) for f in range(fr.nfaces)}
    for t, el, i1, i2 in fr.wedges[e]:
        hits = [(i[0], i[1]) == (f0, j0) for i in (i1, i2)]
        if all(hits):
            r = find(cs.chord_pieces[(f0, d.chord)][i1[2] - 1])
            chi[r] += 1
        elif not any(hits):
            f, j, s = i1
            x = find(cs.chord_pieces[(f, at[f][(j, p)])][s - 1])
            y = find(cs.chord_pieces[(f, at[f][(j, q)])][s - 1])
            if x == y:
                chi[x] -= 1
            else:
                lo, hi = min(x, y), max(x, y)
                parent[hi] = lo
                chi[lo] += chi[hi] - 1
    mapping = {x: find(x) for x in cs.pieces if find(x) != x}
    out.pieces = {x: (cs.pieces[x][0], chi[x]) for x in cs.pieces if find(x) == x}
    _rename_pieces(out, mapping)

    # chords: join the chords at p and q in every other incidence of the edge
    links_by_face: dict[int, list[int]] = {}
    for f, j in fr.incidences[e]:
        if (f, j) != (f0, j0):
            links_by_face.setdefault(f, []).append(j)
    old_cycles = {f: cs.regions(f) for f in set(links_by_face) | {f0}}
    del out.chords[f0][d.chord]
    del out.chord_pieces[(f0, d.chord)]
    new_circles: dict[int, list[tuple[list[int], list[int]]]] = {}
    for f, sides in links_by_face.items():
        link = {}
        for j in sides:
            link[(j, p)] = (j, q)
            link[(j, q)] = (j, p)
        chords = out.chords[f]
        part = {}
        owner = {}
        for cid, (a, b) in chords.items():
            part[a], part[b] = b, a
            owner[a] = owner[b] = cid
        touched = sorted({owner[m] for m in link})
        done = set()
        cyc = old_cycles[f][0]
        index = {m: i for i, m in enumerate(cyc)}
        starts = sorted((m for cid in touched for m in chords[cid] if m not in link), key=index.get)
        new = []
        for m in starts:
            if owner[m] in done:
                continue
            members = []
            cur = m
            while True:
                members.append(owner[cur])
                done.add(owner[cur])
                other = part[cur]
                if other not in link:
                    break
                cur = link[other]
            new.append((m, other, members))
        loops = []
        for cid in touched:
            if cid in done:
                continue
            members, via = [], []
            cur = chords[cid][0]
            while True:
                members.append(owner[cur])
                done.add(owner[cur])
                other = part[cur]
                via.append(other)
                cur = link[other]
                if owner[cur] == cid:
                    break
            loops.append((members, via))
        for start, finish, members in new:
            sides_pieces = {out.chord_pieces[(f, c)] for c in members}
            if len(sides_pieces) != 1:
                raise AssertionError("joined chords disagree on pieces")
            for c in members:
                del chords[c]
                del out.chord_pieces[(f, c)]
            cid = min(members)
            a, b = sorted((start, finish), key=index.get)
            chords[cid] = (a, b)
            out.chord_pieces[(f, cid)] = sides_pieces.pop()
        for members, via in loops:
            sides_pieces = {out.chord_pieces[(f, c)] for c in members}
            if len(sides_pieces) != 1:
                raise AssertionError("joined chords disagree on pieces")
            for c in members:
                del chords[c]
                del out.chord_pieces[(f, c)]
            new_circles.setdefault(f, []).append((members, sorted(via, key=index.get), sides_pieces.pop()))

    # circles: re-anchor those whose gaps vanish, create the closed chains
    for f, (cyc, region, orbits) in old_cycles.items():
        index = {m: i for i, m in enumerate(cyc)}
        n = len(cyc)
        sides = links_by_face.get(f, []) + ([j0] if f == f0 else [])
        vanished = {}
        for j in sides:
            first, second = sorted(((j, p), (j, q)), key=index.get)
            before = cyc[(index[first] - 1) % n]
            vanished[second] = ("gap", before)
            vanished[first] = ("pq", index[first])
        circ = out.circles[f]
        created = []
        next_id = max(circ, default=-1) + 1
        for members, via, pcs in new_circles.get(f, []):
            firsts = [min(((m[0], p), (m[0], q)), key=index.get) for m in via]
            seconds = [max(((m[0], p), (m[0], q)), key=index.get) for m in via]
            lab = cs.gap_label(f, cyc, index[firsts[0]])
            created.append((next_id, Circle(vanished[seconds[0]], lab, pcs),
                            {region[index[m]] for m in firsts}))
            next_id += 1
        inside_region = {}
        for cid, ci, regs in created:
            for r in regs:
                inside_region[r] = cid
        for c, ci in list(circ.items()):
            if ci.loc[0] != "gap" or ci.loc[1] not in vanished:
                continue
            kind, val = vanished[ci.loc[1]]
            if kind == "gap":
                circ[c] = Circle(("gap", val), ci.upper_inside, ci.pieces)
                continue
            r = region[val]
            if r in inside_region:
                circ[c] = Circle(("in", inside_region[r]), ci.upper_inside, ci.pieces)
                continue
            alive = [g for g in orbits[r] if cyc[g] not in vanished]
            if not alive:
                raise AssertionError("region vanished without a circle")
            circ[c] = Circle(("gap", cyc[alive[0]]), ci.upper_inside, ci.pieces)
        for cid, ci, _ in created:
            circ[cid] = ci
    pts = tuple(x for x in cs.points[e] if x not in (p, q))
    out.points[e] = pts
    out.upper.pop(p, None)
    out.upper.pop(q, None)
    return out


# --------------------------------------------------------------------------
# Normalisation, measurement, cutting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    disc: T2Disc
    weight_before: int
    weight_after: int

    def to_json(self) -> dict:
        return {"disc": self.disc.to_json(), "weightBefore": self.weight_before,
                "weightAfter": self.weight_after}


@dataclass(frozen=True)
class ReductionTrace:
    steps: tuple[TraceStep, ...]
    outcome: str  # "normalized", "obstruction" or "step-limit"
    k: Optional[int] = None

    def to_json(self) -> dict:
        return {"steps": len(self.steps), "outcome": self.outcome, "k": self.k}


@dataclass(frozen=True)
class NotAlmostNormal:
    face: int
    chord: int

    def __str__(self) -> str:
        return "not almost-normal"


def normalize(cs: CurveSystem, side: str = UPPER,
              step_limit: Optional[int] = None) -> tuple[CurveSystem, ReductionTrace]:
    """Reduce along strict ``side`` discs until none remain."""
    if side not in (UPPER, LOWER):
        raise ValueError(f"side must be {UPPER!r} or {LOWER!r}")
    if step_limit is not None and step_limit < 0:
        raise ValueError("step limit must be non-negative")
    steps = []
    while True:
        discs = [d for d in find_t2_discs(cs, side) if d.strict]
        if not discs:
            break
        if step_limit is not None and len(steps) >= step_limit:
            return cs, ReductionTrace(tuple(steps), "step-limit")
        d = min(discs, key=lambda d: _disc_key(cs, d))
        before = cs.weight
        cs = elementary_reduction(cs, d)
        steps.append(TraceStep(d, before, cs.weight))
    k = k_normality(cs)
    if isinstance(k, NotAlmostNormal):
        return cs, ReductionTrace(tuple(steps), "obstruction")
    return cs, ReductionTrace(tuple(steps), "normalized", k)


def k_normality(cs: CurveSystem) -> Union[int, NotAlmostNormal]:
    rets = find_returns(cs)
    if rets:
        return NotAlmostNormal(*rets[0])
    k = 0
    for t in range(cs.tri.n):
        for _, cross in cs.curves(t):
            k = max(k, max(cross))
    return k


def cut(cs: CurveSystem) -> CoordinateVector:
    """Cap the curves meeting the 1-skeleton by discs and read off piece counts."""
    if find_returns(cs):
        raise CurveSystemError("cut needs a system without returns")
    rows = []
    two = False
    for t in range(cs.tri.n):
        row = [0] * 10
        for _, cross in cs.curves(t):
            if not any(cross):
                continue
            for p in range(10):
                if all(piece_corners(p, e) == cross[e] for e in range(6)):
                    row[p] += 1
                    two = two or p >= 7
                    break
            else:
                raise CurveSystemError("arc counts not realizable by triangle/quad/octagon pieces")
        rows.append(row)
    system = System.TWO if two or cs.system == System.TWO else System.ONE
    return CoordinateVector(system, tuple(tuple(r[:system.width]) for r in rows))


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


def validate(cs: CurveSystem) -> None:
    """Check the pairing, planarity, piece and co-orientation invariants."""
    fr = cs.frame
    for e, incs in fr.incidences.items():
        pts = cs.points[e]
        if len(set(pts)) != len(pts):
            raise CurveSystemError(f"repeated point on edge {e}")
        for f, j in incs:
            ends = sorted(pid for a, b in cs.chords[f].values() for (jj, pid) in (a, b) if jj == j)
            if ends != sorted(pts):
                raise CurveSystemError(f"face {f} side {j} endpoints do not match edge {e}")
    for f in range(fr.nfaces):
        cyc = cs.cycle(f)
        index = {m: i for i, m in enumerate(cyc)}
        spans = sorted(tuple(sorted((index[a], index[b]))) for a, b in cs.chords[f].values())
        stack: list[int] = []
        for lo, hi in spans:
            while stack and stack[-1] < lo:
                stack.pop()
            if stack and stack[-1] < hi:
                raise CurveSystemError(f"chords cross in face {f}")
            stack.append(hi)
        for c, (a, b) in cs.chords[f].items():
            if index[a] > index[b]:
                raise CurveSystemError("chord ends out of order")
            if not _chord_consistent(cs, f, a, b):
                raise CurveSystemError(f"chord {c} of face {f} has inconsistent co-orientation")
            for s in (1, 2):
                pc = cs.chord_pieces[(f, c)][s - 1]
                if pc not in cs.pieces or cs.pieces[pc][0] != fr.slot_tet(f, s):
                    raise CurveSystemError(f"chord {c} of face {f} has a bad piece")
        for c, ci in cs.circles[f].items():
            seen = {c}
            loc = ci.loc
            while loc[0] == "in":
                if loc[1] in seen or loc[1] not in cs.circles[f]:
                    raise CurveSystemError("circle nesting is broken")
                seen.add(loc[1])
                loc = cs.circles[f][loc[1]].loc
            if loc[1] not in index:
                raise CurveSystemError(f"circle {c} of face {f} anchored at a missing mark")
            for s in (1, 2):
                pc = ci.pieces[s - 1]
                if pc not in cs.pieces or cs.pieces[pc][0] != fr.slot_tet(f, s):
                    raise CurveSystemError(f"circle {c} of face {f} has a bad piece")
    for t in range(cs.tri.n):
        for curve, _ in cs.curves(t):
            if len({cs.node_piece(x) for x in curve}) != 1:
                raise CurveSystemError(f"a curve on tetrahedron {t} spans several pieces")
    for p, lab in cs.piece_labels().items():
        if lab["genus"] is None:
            raise CurveSystemError(f"piece {p} has impossible topology {lab}")
        if lab["boundary"] == 0:
            raise CurveSystemError(f"piece {p} has no boundary")


# --------------------------------------------------------------------------
# Tube scripts
# --------------------------------------------------------------------------


class TubeScriptError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_tube_script(text: str) -> list[tuple]:
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "tube-tet" and len(tok) == 4:
                out.append(("tube-tet", int(tok[1]), int(tok[2]), int(tok[3])))
            elif tok[0] == "tube-face" and len(tok) == 5:
                out.append(("tube-face", int(tok[1]), int(tok[2]), int(tok[3]), tok[4]))
            else:
                raise TubeScriptError(f"unknown directive {line!r}", no)
        except ValueError as exc:
            if isinstance(exc, TubeScriptError):
                raise
            raise TubeScriptError(f"bad number in {line!r}", no) from None
    return out


def apply_tubes(cs: CurveSystem, script: Sequence[tuple]) -> CurveSystem:
    for d in script:
        if d[0] == "tube-tet":
            cs = tube_in_tet(cs, *d[1:])
        else:
            cs = tube_in_face(cs, *d[1:])
    return cs
