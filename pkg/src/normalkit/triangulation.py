"""Triangulations of closed 3-manifolds: gluing files and skeleton classes.

Conventions used throughout the package:

* face ``f`` of a tetrahedron is the triangle opposite vertex ``f``;
* the six edges of a tetrahedron are indexed by :data:`EDGES`, i.e. by the
  unordered vertex pairs in lexicographic order;
* a permutation is stored as the tuple of images of ``(0, 1, 2, 3)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Iterator, Optional, Sequence

Perm = tuple[int, int, int, int]

EDGES: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_INDEX: dict[tuple[int, int], int] = {e: i for i, e in enumerate(EDGES)}
IDENTITY: Perm = (0, 1, 2, 3)


def edge_index(a: int, b: int) -> int:
    return EDGE_INDEX[(a, b) if a < b else (b, a)]


def face_vertices(f: int) -> tuple[int, int, int]:
    """Vertices of face ``f`` in increasing order."""
    return tuple(v for v in range(4) if v != f)  # type: ignore[return-value]


def inverse(p: Sequence[int]) -> Perm:
    inv = [0, 0, 0, 0]
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)  # type: ignore[return-value]


def compose(p: Sequence[int], q: Sequence[int]) -> Perm:
    """``p o q``: apply ``q`` first."""
    return tuple(p[q[i]] for i in range(4))  # type: ignore[return-value]


def perm_sign(p: Sequence[int]) -> int:
    inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
    return -1 if inversions % 2 else 1


class TriangulationError(ValueError):
    """Raised for malformed gluing files or inconsistent gluings."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class Gluing:
    tet: int
    face: int
    perm: Perm


@dataclass(frozen=True)
class Triangulation:
    """``gluings[t][f]`` says where face ``f`` of tetrahedron ``t`` is glued."""

    gluings: tuple[tuple[Gluing, ...], ...]
    label: Optional[str] = None

    def __post_init__(self) -> None:
        _check_gluings(self.gluings)

    @property
    def n(self) -> int:
        return len(self.gluings)

    def glued(self, tet: int, face: int) -> Gluing:
        return self.gluings[tet][face]

    @cached_property
    def skeleton(self) -> "SkeletonIndex":
        return compute_skeleton(self)

    @classmethod
    def from_table(cls, table: Sequence[Sequence[tuple[int, Sequence[int]]]],
                   label: Optional[str] = None) -> "Triangulation":
        """Build from ``table[t][f] = (tet', perm)``; the target face is ``perm[f]``."""
        rows = []
        for t, row in enumerate(table):
            if len(row) != 4:
                raise TriangulationError(f"tetrahedron {t} needs 4 gluings")
            rows.append(tuple(Gluing(k, p[f], tuple(p)) for f, (k, p) in enumerate(row)))
        return cls(tuple(rows), label)

    def relabel(self, order: Sequence[int]) -> "Triangulation":
        """Renumber tetrahedra: old tetrahedron ``i`` becomes ``order[i]``."""
        new: list = [None] * self.n
        for t, row in enumerate(self.gluings):
            new[order[t]] = tuple(Gluing(order[g.tet], g.face, g.perm) for g in row)
        return Triangulation(tuple(new), self.label)


def _check_gluings(gluings: Sequence[Sequence[Gluing]]) -> None:
    n = len(gluings)
    if n == 0:
        raise TriangulationError("triangulation has no tetrahedra")
    for t, row in enumerate(gluings):
        if len(row) != 4:
            raise TriangulationError(f"tetrahedron {t} has {len(row)} face slots")
        for f, g in enumerate(row):
            if g is None:
                raise TriangulationError(f"unglued face: tet {t} face {f}")
            if not 0 <= g.tet < n:
                raise TriangulationError(f"tet {t} face {f} glued to missing tetrahedron {g.tet}")
            if sorted(g.perm) != [0, 1, 2, 3]:
                raise TriangulationError(f"tet {t} face {f}: {g.perm} is not a permutation")
            if g.perm[f] != g.face:
                raise TriangulationError(
                    f"permutation not mapping face to face: tet {t} face {f} -> "
                    f"tet {g.tet} face {g.face} under {''.join(map(str, g.perm))}")
            if (g.tet, g.face) == (t, f):
                raise TriangulationError(f"tet {t} face {f} is glued to itself")
    for t, row in enumerate(gluings):
        for f, g in enumerate(row):
            back = gluings[g.tet][g.face]
            if (back.tet, back.face) != (t, f) or back.perm != inverse(g.perm):
                raise TriangulationError(
                    f"non-involutive gluing: tet {t} face {f} -> tet {g.tet} face {g.face}")


# --------------------------------------------------------------------------
# Gluing file format
# --------------------------------------------------------------------------

_TET_RE = re.compile(r"tet\s+(\d+)\s*:")
_GLUE_RE = re.compile(r"(\d+)\(([0-3]{4})\)")


def parse_triangulation(text: str) -> Triangulation:
    label = None
    rows: dict[int, tuple[int, list]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("name:"):
                label = body[5:].strip() or None
            continue
        offset = len(raw) - len(raw.lstrip())
        m = _TET_RE.match(stripped)
        if not m:
            raise TriangulationError("expected 'tet <i>:'", lineno, offset + 1)
        t = int(m.group(1))
        if t in rows:
            raise TriangulationError(f"tetrahedron {t} listed twice", lineno, offset + 1)
        entries = []
        pos = m.end()
        for tok in re.finditer(r"\S+", stripped[pos:]):
            col = offset + pos + tok.start() + 1
            if tok.group() == "-":
                entries.append((None, col))
                continue
            g = _GLUE_RE.fullmatch(tok.group())
            if not g:
                raise TriangulationError(f"bad gluing token {tok.group()!r}", lineno, col)
            perm = tuple(int(c) for c in g.group(2))
            if sorted(perm) != [0, 1, 2, 3]:
                raise TriangulationError(f"{g.group(2)} is not a permutation", lineno, col)
            entries.append(((int(g.group(1)), perm), col))
        if len(entries) != 4:
            raise TriangulationError(f"tetrahedron {t} needs 4 gluings, got {len(entries)}",
                                     lineno, offset + 1)
        rows[t] = (lineno, entries)
    if not rows:
        raise TriangulationError("no tetrahedra found")
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise TriangulationError("tetrahedra must be numbered 0..n-1 consecutively")
    gluings = []
    for t in range(n):
        lineno, entries = rows[t]
        row = []
        for f, (entry, col) in enumerate(entries):
            if entry is None:
                raise TriangulationError(f"unglued face: tet {t} face {f}", lineno, col)
            k, perm = entry
            if k >= n:
                raise TriangulationError(f"tetrahedron {k} does not exist", lineno, col)
            row.append(Gluing(k, perm[f], perm))  # type: ignore[arg-type]
        gluings.append(tuple(row))
    return Triangulation(tuple(gluings), label)


def serialize_triangulation(tri: Triangulation) -> str:
    lines = []
    if tri.label:
        lines.append(f"# name: {tri.label}")
    for t, row in enumerate(tri.gluings):
        parts = " ".join(f"{g.tet}({''.join(map(str, g.perm))})" for g in row)
        lines.append(f"tet {t}: {parts}")
    return "\n".join(lines) + "\n"


def load_triangulation(path) -> Triangulation:
    from pathlib import Path

    return parse_triangulation(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# Skeleton
# --------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self) -> list[list]:
        groups: dict = {}
        for x in sorted(self.parent):
            groups.setdefault(self.find(x), []).append(x)
        return sorted(groups.values())


@dataclass(frozen=True)
class FaceClass:
    """A glued pair of face slots; side 1 is the lexicographically smaller slot."""

    index: int
    tet1: int
    face1: int
    tet2: int
    face2: int
    perm: Perm  # vertex map from tet1 to tet2

    @property
    def vertices(self) -> tuple[int, int, int]:
        return face_vertices(self.face1)

    @property
    def slots(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.tet1, self.face1), (self.tet2, self.face2)


@dataclass(frozen=True)
class SkeletonIndex:
    vertex_classes: tuple[tuple[tuple[int, int], ...], ...]
    edge_classes: tuple[tuple[tuple[int, int], ...], ...]
    face_classes: tuple[FaceClass, ...]
    orientable: bool
    tet_orientation: tuple[int, ...]
    # (tet, vertex) -> vertex class, (tet, edge) -> edge class
    vertex_of: dict = field(repr=False, compare=False)
    edge_of: dict = field(repr=False, compare=False)
    # (tet, edge) -> True when the slot's low->high direction agrees with its class
    edge_forward: dict = field(repr=False, compare=False)
    # (tet, face) -> (face class index, side 1 or 2)
    face_of: dict = field(repr=False, compare=False)
    reversed_edges: tuple[int, ...] = ()

    @property
    def edge_degrees(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.edge_classes)

    def edge_tail_head(self, tet: int, edge: int) -> tuple[int, int]:
        """Local vertices of ``(tet, edge)`` at the tail and the head of its class."""
        a, b = EDGES[edge]
        return (a, b) if self.edge_forward[(tet, edge)] else (b, a)


def compute_skeleton(tri: Triangulation) -> SkeletonIndex:
    n = tri.n
    vuf = _UnionFind([(t, v) for t in range(n) for v in range(4)])
    for t in range(n):
        for f in range(4):
            g = tri.gluings[t][f]
            for v in face_vertices(f):
                vuf.union((t, v), (g.tet, g.perm[v]))
    vclasses = vuf.classes()
    vertex_of = {slot: i for i, cls in enumerate(vclasses) for slot in cls}

    # Edge classes with orientation: propagate a direction bit through gluings.
    slots = [(t, e) for t in range(n) for e in range(6)]
    adj: dict = {s: [] for s in slots}
    for t in range(n):
        for f in range(4):
            g = tri.gluings[t][f]
            for a, b in (EDGES[i] for i in range(6) if f not in EDGES[i]):
                ia, ib = g.perm[a], g.perm[b]
                adj[(t, edge_index(a, b))].append(((g.tet, edge_index(ia, ib)), ia > ib))
    edge_of: dict = {}
    forward: dict = {}
    eclasses: list = []
    reversed_edges: list = []
    for s in slots:
        if s in edge_of:
            continue
        idx = len(eclasses)
        members = [s]
        edge_of[s] = idx
        forward[s] = True
        stack = [s]
        bad = False
        while stack:
            cur = stack.pop()
            for nxt, flip in adj[cur]:
                want = forward[cur] != flip
                if nxt not in edge_of:
                    edge_of[nxt] = idx
                    forward[nxt] = want
                    members.append(nxt)
                    stack.append(nxt)
                elif forward[nxt] != want:
                    bad = True
        eclasses.append(tuple(sorted(members)))
        if bad:
            reversed_edges.append(idx)

    faces = []
    face_of = {}
    for t in range(n):
        for f in range(4):
            if (t, f) in face_of:
                continue
            g = tri.gluings[t][f]
            fc = FaceClass(len(faces), t, f, g.tet, g.face, g.perm)
            faces.append(fc)
            face_of[(t, f)] = (fc.index, 1)
            face_of[(g.tet, g.face)] = (fc.index, 2)

    orient = [0] * n
    orientable = True
    for start in range(n):
        if orient[start]:
            continue
        orient[start] = 1
        stack = [start]
        while stack:
            t = stack.pop()
            for g in tri.gluings[t]:
                want = -orient[t] * perm_sign(g.perm)
                if orient[g.tet] == 0:
                    orient[g.tet] = want
                    stack.append(g.tet)
                elif orient[g.tet] != want:
                    orientable = False
    return SkeletonIndex(
        vertex_classes=tuple(tuple(c) for c in vclasses),
        edge_classes=tuple(eclasses),
        face_classes=tuple(faces),
        orientable=orientable,
        tet_orientation=tuple(orient),
        vertex_of=vertex_of,
        edge_of=edge_of,
        edge_forward=forward,
        face_of=face_of,
        reversed_edges=tuple(reversed_edges),
    )


def edge_embeddings(tri: Triangulation, edge_class: int) -> list[tuple[int, int, int, int]]:
    """Cyclic walk around an edge class.

    Returns ``(tet, edge, face_entering, face_leaving)`` for each slot; the faces
    are the two faces of the tetrahedron containing the edge.
    """
    sk = tri.skeleton
    start = sk.edge_classes[edge_class][0]
    t, e = start
    a, b = EDGES[e]
    c, d = (v for v in range(4) if v not in (a, b))
    out = []
    cur = (t, a, b, c, d)  # walk leaving through face d, entering from face c
    for _ in range(len(sk.edge_classes[edge_class])):
        t, a, b, c, d = cur
        out.append((t, edge_index(a, b), c, d))
        g = tri.gluings[t][d]
        p = g.perm
        cur = (g.tet, p[a], p[b], p[d], p[c])
    return out


def vertex_link_euler(tri: Triangulation, vclass: int) -> int:
    sk = tri.skeleton
    members = set(sk.vertex_classes[vclass])
    tris = len(members)
    corners = sum(1 for fc in sk.face_classes for v in fc.vertices
                  if (fc.tet1, v) in members)
    ends = 0
    for t, e in (cls[0] for cls in sk.edge_classes):
        a, b = EDGES[e]
        ends += ((t, a) in members) + ((t, b) in members)
    return ends - corners + tris


def is_closed_manifold(tri: Triangulation) -> bool:
    sk = tri.skeleton
    if sk.reversed_edges:
        return False
    return all(vertex_link_euler(tri, i) == 2 for i in range(len(sk.vertex_classes)))


def all_permutations() -> Iterator[Perm]:
    return permutations(range(4))  # type: ignore[return-value]
