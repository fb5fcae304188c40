"""Normal (7 per tetrahedron) and 2-normal (10 per tetrahedron) coordinates.

Piece types inside one tetrahedron are numbered

=====  ==================  ==========================
index  piece               meets
=====  ==================  ==========================
0-3    triangle at v       the three edges at v
4-6    quad, axis a        the four edges off the axis
7-9    octagon, axis a     axis edges twice, others once
=====  ==================  ==========================

with axes ``0 -> 01|23``, ``1 -> 02|13``, ``2 -> 03|12``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

from .triangulation import EDGES, Triangulation, edge_index, face_vertices

AXES: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = (
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
)


class System(str, Enum):
    ONE = "1N"
    TWO = "2N"

    @property
    def width(self) -> int:
        return 7 if self is System.ONE else 10

    @classmethod
    def parse(cls, text: str) -> "System":
        key = text.strip().upper()
        if key in ("1N", "1"):
            return cls.ONE
        if key in ("2N", "2"):
            return cls.TWO
        raise ValueError(f"unknown coordinate system {text!r}")


@dataclass(frozen=True)
class PieceType:
    kind: str  # "tri" | "quad" | "oct"
    index: int  # vertex for triangles, axis otherwise

    @property
    def coord(self) -> int:
        return {"tri": 0, "quad": 4, "oct": 7}[self.kind] + self.index

    @classmethod
    def from_coord(cls, i: int) -> "PieceType":
        if i < 4:
            return cls("tri", i)
        if i < 7:
            return cls("quad", i - 4)
        return cls("oct", i - 7)

    @property
    def is_saddle(self) -> bool:
        return self.kind != "tri"

    def __str__(self) -> str:
        if self.kind == "tri":
            return f"T{self.index}"
        (a, b), (c, d) = AXES[self.index]
        return f"{'Q' if self.kind == 'quad' else 'O'}{a}{b}|{c}{d}"


def axis_partner(axis: int, v: int) -> int:
    for pair in AXES[axis]:
        if v in pair:
            return pair[1] if pair[0] == v else pair[0]
    raise ValueError(v)


def axis_side_a(axis: int) -> tuple[int, int]:
    """The vertex pair of an axis containing vertex 0."""
    return AXES[axis][0]


@lru_cache(maxsize=None)
def piece_arcs(coord: int, face: int) -> tuple[int, ...]:
    """Vertices cut off by the normal arcs a piece leaves in ``face``.

    Returned as a sorted tuple (a multiset; no piece repeats an arc type).
    """
    p = PieceType.from_coord(coord)
    if p.kind == "tri":
        return () if p.index == face else (p.index,)
    partner = axis_partner(p.index, face)
    if p.kind == "quad":
        return (partner,)
    other = next(pair for pair in AXES[p.index] if partner not in pair)
    return tuple(sorted(other))


def piece_arc_table(piece: PieceType, face: int) -> tuple[int, ...]:
    """Arc types, as cut-off vertices, that ``piece`` leaves in ``face``."""
    return piece_arcs(piece.coord, face)


@lru_cache(maxsize=None)
def piece_corners(coord: int, edge: int) -> int:
    """How many times a piece meets a tetrahedron edge."""
    a, b = EDGES[edge]
    p = PieceType.from_coord(coord)
    if p.kind == "tri":
        return 1 if p.index in (a, b) else 0
    on_axis = (a, b) in AXES[p.index]
    if p.kind == "quad":
        return 0 if on_axis else 1
    return 2 if on_axis else 1


class MatchingError(ValueError):
    """A coordinate vector fails a matching equation."""


@dataclass(frozen=True)
class CoordinateVector:
    system: System
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for row in self.counts:
            if len(row) != self.system.width:
                raise ValueError(f"expected {self.system.width} entries per tetrahedron")
            if any(c < 0 for c in row):
                raise ValueError("coordinates must be non-negative")

    @classmethod
    def zero(cls, n: int, system: System) -> "CoordinateVector":
        return cls(system, tuple((0,) * system.width for _ in range(n)))

    @classmethod
    def from_flat(cls, system: System, flat: Sequence[int]) -> "CoordinateVector":
        w = system.width
        if len(flat) % w:
            raise ValueError("flat vector length is not a multiple of the width")
        return cls(system, tuple(tuple(int(x) for x in flat[i:i + w]) for i in range(0, len(flat), w)))

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(c for row in self.counts for c in row)

    def __getitem__(self, key: tuple[int, int]) -> int:
        t, p = key
        return self.counts[t][p] if p < self.system.width else 0

    def __add__(self, other: "CoordinateVector") -> "CoordinateVector":
        if self.system != other.system or self.n != other.n:
            raise ValueError("incompatible coordinate vectors")
        return CoordinateVector(self.system, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.counts, other.counts)))

    def scale(self, k: int) -> "CoordinateVector":
        return CoordinateVector(self.system, tuple(tuple(k * c for c in r) for r in self.counts))

    def to_system(self, system: System) -> "CoordinateVector":
        if system == self.system:
            return self
        if system is System.TWO:
            return CoordinateVector(system, tuple(r + (0, 0, 0) for r in self.counts))
        if self.octagon_total:
            raise ValueError("vector has octagons; cannot express it in 1N coordinates")
        return CoordinateVector(system, tuple(r[:7] for r in self.counts))

    @property
    def octagon_total(self) -> int:
        if self.system is System.ONE:
            return 0
        return sum(sum(r[7:]) for r in self.counts)

    @property
    def is_zero(self) -> bool:
        return not any(self.flat)

    def support(self) -> tuple[tuple[int, int], ...]:
        return tuple((t, p) for t, r in enumerate(self.counts) for p, c in enumerate(r) if c)

    def sort_key(self) -> tuple:
        return self.flat

    def to_json(self) -> dict:
        return {"system": self.system.value, "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_json(cls, data: dict) -> "CoordinateVector":
        system = System.parse(data["system"])
        return cls(system, tuple(tuple(int(c) for c in r) for r in data["counts"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


# --------------------------------------------------------------------------
# Matching equations
# --------------------------------------------------------------------------

def matching_matrix(tri: Triangulation, system: System) -> list[list[int]]:
    """Rows indexed by (face class, arc type); arc type = vertex cut off on side 1."""
    width = system.width
    rows = []
    for fc in tri.skeleton.face_classes:
        for v in fc.vertices:
            row = [0] * (width * tri.n)
            w = fc.perm[v]
            for p in range(width):
                row[fc.tet1 * width + p] += piece_arcs(p, fc.face1).count(v)
                row[fc.tet2 * width + p] -= piece_arcs(p, fc.face2).count(w)
            rows.append(row)
    return rows


def residual(tri: Triangulation, v: CoordinateVector) -> list[int]:
    flat = v.flat
    return [sum(a * x for a, x in zip(row, flat) if a) for row in matching_matrix(tri, v.system)]


def is_matched(tri: Triangulation, v: CoordinateVector) -> bool:
    if v.n != tri.n:
        return False
    return not any(residual(tri, v))


def is_admissible(v: CoordinateVector, strict: bool = True) -> bool:
    """At most one saddle type (quad or octagon) per tetrahedron.

    With ``strict=False`` a quad and an octagon of the same axis may coexist.
    """
    for row in v.counts:
        used = [p for p in range(4, len(row)) if row[p]]
        if len(used) > 1:
            if strict or len({(p - 4) % 3 for p in used}) > 1:
                return False
    return True


def arc_counts(tri: Triangulation, v: CoordinateVector) -> list[dict[int, int]]:
    """Normal arc counts per face class, keyed by the cut-off vertex (side-1 labels)."""
    out = []
    for fc in tri.skeleton.face_classes:
        row = v.counts[fc.tet1]
        counts = {u: 0 for u in fc.vertices}
        for p, c in enumerate(row):
            if c:
                for u in piece_arcs(p, fc.face1):
                    counts[u] += c
        out.append(counts)
    return out


def edge_corner_counts(tri: Triangulation, v: CoordinateVector) -> list[int]:
    """Points of the surface on each edge class; checks every incident slot agrees."""
    sk = tri.skeleton
    out = []
    for ci, cls in enumerate(sk.edge_classes):
        seen = None
        for t, e in cls:
            row = v.counts[t]
            c = sum(k * piece_corners(p, e) for p, k in enumerate(row) if k)
            if seen is None:
                seen = c
            elif c != seen:
                raise MatchingError(f"edge class {ci}: slots disagree ({seen} vs {c})")
        out.append(seen or 0)
    return out


def weight(tri: Triangulation, v: CoordinateVector) -> int:
    return sum(edge_corner_counts(tri, v))


def euler_characteristic(tri: Triangulation, v: CoordinateVector) -> int:
    arcs = sum(sum(c.values()) for c in arc_counts(tri, v))
    return weight(tri, v) - arcs + sum(v.flat)


def vertex_link(tri: Triangulation, vclass: int, system: System = System.ONE) -> CoordinateVector:
    rows = [[0] * system.width for _ in range(tri.n)]
    for t, u in tri.skeleton.vertex_classes[vclass]:
        rows[t][u] += 1
    return CoordinateVector(system, tuple(tuple(r) for r in rows))


def vertex_links(tri: Triangulation, system: System = System.ONE) -> list[CoordinateVector]:
    return [vertex_link(tri, i, system) for i in range(len(tri.skeleton.vertex_classes))]


def weight_functional(tri: Triangulation, system: System) -> list:
    """A linear functional equal to the weight on matched vectors, positive on every coordinate.

    Each edge class contributes the average of its slot corner counts.
    """
    from fractions import Fraction

    sk = tri.skeleton
    coeff = [Fraction(0)] * (system.width * tri.n)
    for cls in sk.edge_classes:
        share = Fraction(1, len(cls))
        for t, e in cls:
            for p in range(system.width):
                k = piece_corners(p, e)
                if k:
                    coeff[t * system.width + p] += share * k
    return coeff


def sum_vectors(vectors: Iterable[CoordinateVector]) -> CoordinateVector:
    it = iter(vectors)
    acc = next(it)
    for v in it:
        acc = acc + v
    return acc


__all__ = [
    "AXES", "System", "PieceType", "CoordinateVector", "MatchingError",
    "piece_arcs", "piece_corners", "matching_matrix", "residual", "is_matched",
    "is_admissible", "arc_counts", "edge_corner_counts", "weight",
    "euler_characteristic", "vertex_link", "vertex_links", "weight_functional",
    "face_vertices", "edge_index", "sum_vectors",
]
