"""Command-line front end.

Exit status is 0 on success, 1 when the input is well formed but the
computation rejects it (bad triangulation, unmatched vector, invalid tube),
and 2 on usage errors.  JSON goes to stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO

from . import __version__
from .coords import (CoordinateVector, MatchingError, System, euler_characteristic, is_admissible,
                     is_matched, vertex_links, weight)
from .enumeration import (SPHERE_INVENTORY_NOTE, RayLimitExceeded, enumerate_bounded,
                          enumerate_vertex_surfaces, find_normal_spheres,
                          find_octagonal_candidates)
from .reduce import (CurveSystemError, TubeScriptError, apply_tubes, cut, from_coordinates,
                     k_normality, normalize, parse_tube_script)
from .surfaces import AdmissibilityError, analyze, kneser_check
from .triangulation import Triangulation, TriangulationError, load_triangulation


class DomainError(Exception):
    """Input was readable but the requested computation rejects it."""


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str]
    system: System = System.ONE
    max_weight: Optional[int] = None
    octagon_total: Optional[int] = None
    side: str = "upper"
    step_limit: Optional[int] = None
    output_format: str = "json"
    strict: bool = True
    allow_nonorientable: bool = False
    extra: dict = field(default_factory=dict)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _load_tri(path: str, cfg: RunConfig) -> Triangulation:
    try:
        tri = load_triangulation(path)
    except TriangulationError as exc:
        where = path
        if exc.line is not None:
            where += f":{exc.line}" + (f":{exc.col}" if exc.col is not None else "")
        raise DomainError(f"{where}: {exc.message}") from None
    except OSError as exc:
        raise DomainError(f"{path}: {exc.strerror}") from None
    if not tri.skeleton.orientable and not cfg.allow_nonorientable:
        raise DomainError(f"{path}: triangulation is not orientable (pass --allow-nonorientable)")
    return tri


def _load_vectors(path: str, tri: Triangulation) -> list[CoordinateVector]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"{path}: {exc.strerror}") from None
    try:
        text = text.strip()
        if text.startswith("["):
            docs = json.loads(text)
        elif "\n" in text:
            docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            docs = [json.loads(text)]
        vecs = []
        for d in docs:
            d = d.get("vector", d)
            vecs.append(CoordinateVector.from_json(d))
    except (ValueError, KeyError, TypeError) as exc:
        raise DomainError(f"{path}: not a coordinate vector document ({exc})") from None
    for v in vecs:
        if v.n != tri.n:
            raise DomainError(f"{path}: vector has {v.n} tetrahedra, triangulation has {tri.n}")
        if not is_matched(tri, v):
            raise DomainError(f"{path}: vector does not satisfy the matching equations")
    return vecs


def _vector_line(tri: Triangulation, i: int, v: CoordinateVector) -> dict:
    return {"index": i, "vector": v.to_json(), "weight": weight(tri, v),
            "chi": euler_characteristic(tri, v)}


def _text_vector(v: CoordinateVector) -> str:
    return " | ".join(" ".join(str(c) for c in row) for row in v.counts)


# -- subcommands -----------------------------------------------------------


def cmd_validate(cfg: RunConfig, out: TextIO) -> None:
    for path in cfg.inputs:
        tri = _load_tri(path, RunConfig("validate", [], allow_nonorientable=True))
        sk = tri.skeleton
        doc = {"file": path, "valid": True, "name": tri.label, "tets": tri.n,
               "vertices": len(sk.vertex_classes), "edges": len(sk.edge_classes),
               "orientable": sk.orientable}
        if cfg.output_format == "text":
            out.write(f"{path}: ok, {tri.n} tetrahedra, "
                      f"{'orientable' if sk.orientable else 'non-orientable'}\n")
        else:
            out.write(_dump(doc) + "\n")


def cmd_skeleton(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    sk = tri.skeleton
    doc = {
        "tets": tri.n,
        "vertexClasses": [[list(s) for s in c] for c in sk.vertex_classes],
        "edgeClasses": [{"slots": [list(s) for s in c], "degree": len(c)} for c in sk.edge_classes],
        "faceClasses": [{"index": f.index, "side1": [f.tet1, f.face1], "side2": [f.tet2, f.face2],
                         "perm": list(f.perm)} for f in sk.face_classes],
        "orientable": sk.orientable,
    }
    if cfg.output_format == "text":
        out.write(f"tets {tri.n} vertices {len(sk.vertex_classes)} edges {len(sk.edge_classes)} "
                  f"faces {len(sk.face_classes)} orientable {str(sk.orientable).lower()}\n")
        out.write("edge degrees " + " ".join(map(str, sk.edge_degrees)) + "\n")
    else:
        out.write(_dump(doc) + "\n")


def cmd_enumerate(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    if cfg.max_weight is None:
        if cfg.octagon_total is not None:
            raise DomainError("--octagons needs --max-weight")
        try:
            vecs = enumerate_vertex_surfaces(tri, cfg.system, ray_limit=cfg.extra.get("ray_limit"),
                                             strict=cfg.strict).rays
        except RayLimitExceeded as exc:
            raise DomainError(str(exc)) from None
    else:
        vecs = enumerate_bounded(tri, cfg.system, cfg.max_weight, cfg.octagon_total)
    for i, v in enumerate(vecs):
        if cfg.output_format == "text":
            out.write(f"{i}: w={weight(tri, v)} chi={euler_characteristic(tri, v)} {_text_vector(v)}\n")
        else:
            out.write(_dump(_vector_line(tri, i, v)) + "\n")


def cmd_spheres(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    spheres = find_normal_spheres(tri, depth=cfg.extra.get("depth", 2))
    links = {v.flat for v in vertex_links(tri)}
    items = [{**_vector_line(tri, i, v), "isVertexLink": v.flat in links} for i, v in enumerate(spheres)]
    if cfg.output_format == "text":
        for it, v in zip(items, spheres):
            out.write(f"{it['index']}: w={it['weight']}{' link' if it['isVertexLink'] else ''} "
                      f"{_text_vector(v)}\n")
    else:
        out.write(_dump({"inventory": SPHERE_INVENTORY_NOTE, "depth": cfg.extra.get("depth", 2),
                         "spheres": items}) + "\n")


def cmd_octagons(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    if cfg.max_weight is None:
        raise DomainError("octagons needs --max-weight")
    for i, c in enumerate(find_octagonal_candidates(tri, cfg.max_weight)):
        if cfg.output_format == "text":
            out.write(f"{i}: w={c.weight} chi={c.chi} components={c.components} "
                      f"{_text_vector(c.vector)}\n")
        else:
            out.write(_dump({"index": i, "vector": c.vector.to_json(), "weight": c.weight,
                             "chi": c.chi, "components": c.components}) + "\n")


def cmd_analyze(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    docs = []
    for v in _load_vectors(cfg.inputs[1], tri):
        if not is_admissible(v):
            raise DomainError("vector is not admissible")
        docs.append([r.to_json() for r in analyze(tri, v)])
    if cfg.output_format == "text":
        for i, reps in enumerate(docs):
            for r in reps:
                out.write(f"{i}.{r['componentId']}: chi={r['chi']} orientable={str(r['orientable']).lower()}"
                          f" genus={r['genus']} link={str(r['isVertexLink']).lower()}\n")
    else:
        out.write(_dump(docs) + "\n")


def cmd_kneser(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    copies = cfg.extra.get("copies", 1)
    surface = cfg.extra.get("surface", "vertex-link")
    if surface == "vertex-link":
        base = vertex_links(tri, cfg.system)[0]
    elif surface.startswith("ray:"):
        rays = enumerate_vertex_surfaces(tri, cfg.system).rays
        k = int(surface[4:])
        if not 0 <= k < len(rays):
            raise DomainError(f"no ray {k}; there are {len(rays)}")
        base = rays[k]
    else:
        vecs = _load_vectors(surface, tri)
        base = vecs[0]
    v = base.scale(copies)
    reports = analyze(tri, v)
    groups = kneser_check(reports, tri.n)
    doc = {"tets": tri.n, "threshold": 20 * tri.n, "components": len(reports),
           "groups": [{"components": g, "size": len(g),
                       "pattern": reports[g[0]].to_json()["pattern"]} for g in groups]}
    if cfg.output_format == "text":
        out.write(f"components {len(reports)} threshold {20 * tri.n} groups "
                  + " ".join(str(len(g)) for g in groups) + "\n")
    else:
        out.write(_dump(doc) + "\n")


def cmd_normalize(cfg: RunConfig, out: TextIO) -> None:
    tri = _load_tri(cfg.inputs[0], cfg)
    vecs = _load_vectors(cfg.inputs[1], tri)
    if len(vecs) != 1:
        raise DomainError("normalize takes exactly one vector")
    script = []
    if cfg.extra.get("script"):
        try:
            script = parse_tube_script(Path(cfg.extra["script"]).read_text())
        except OSError as exc:
            raise DomainError(f"{cfg.extra['script']}: {exc.strerror}") from None
        except TubeScriptError as exc:
            raise DomainError(f"{cfg.extra['script']}:{exc.line}: {exc.args[0]}") from None
    cs = apply_tubes(from_coordinates(tri, vecs[0]), script)
    final, trace = normalize(cs, cfg.side, cfg.step_limit)
    k = k_normality(final)
    tail = {"final": True, "outcome": trace.outcome, "steps": len(trace.steps), "weight": final.weight,
            "k": k if isinstance(k, int) else str(k)}
    if isinstance(k, int) and k <= 2:
        tail["vector"] = cut(final).to_json()
    if cfg.output_format == "text":
        for i, s in enumerate(trace.steps):
            d = s.disc
            out.write(f"step {i}: face {d.face} chord {d.chord} points {d.points[0]},{d.points[1]} "
                      f"{s.weight_before}->{s.weight_after}\n")
        out.write(f"{trace.outcome} k={tail['k']} weight={final.weight}\n")
    else:
        for i, s in enumerate(trace.steps):
            out.write(_dump({"step": i, **s.to_json()}) + "\n")
        out.write(_dump(tail) + "\n")


COMMANDS = {
    "validate": cmd_validate,
    "skeleton": cmd_skeleton,
    "enumerate": cmd_enumerate,
    "spheres": cmd_spheres,
    "octagons": cmd_octagons,
    "analyze": cmd_analyze,
    "kneser": cmd_kneser,
    "normalize": cmd_normalize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("json", "text"), default="json",
                        help="output format (default: json)")
    common.add_argument("--allow-nonorientable", action="store_true",
                        help="accept non-orientable triangulations (rejected by default)")
    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--system", choices=("1n", "2n"), default="1n",
                        help="coordinate system: 1n (triangles, quads) or 2n (adds octagons); default 1n")

    p = argparse.ArgumentParser(prog="normalkit", description="k-normal surfaces in triangulated 3-manifolds")
    p.add_argument("--version", action="version", version=f"normalkit {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("validate", parents=[common], help="check gluing files")
    s.add_argument("files", nargs="+")
    s = sub.add_parser("skeleton", parents=[common], help="vertex, edge and face classes")
    s.add_argument("file")
    s = sub.add_parser("enumerate", parents=[common, system],
                       help="vertex surfaces, or all surfaces up to a weight (JSON lines)")
    s.add_argument("file")
    s.add_argument("--max-weight", type=int, help="switch to bounded enumeration up to this weight")
    s.add_argument("--octagons", type=int, help="with --max-weight: required total octagon count")
    s.add_argument("--ray-limit", type=int, help="abort the cone computation past this many rays")
    s.add_argument("--allow-same-axis", action="store_true",
                   help="admit a quad and an octagon of the same axis in one tetrahedron")
    s = sub.add_parser("spheres", parents=[common], help="normal sphere inventory")
    s.add_argument("file")
    s.add_argument("--depth", type=int, default=2, help="largest number of rays summed (default 2)")
    s = sub.add_parser("octagons", parents=[common], help="surfaces with exactly one octagon (JSON lines)")
    s.add_argument("file")
    s.add_argument("--max-weight", type=int, required=True)
    s = sub.add_parser("analyze", parents=[common], help="components of vectors")
    s.add_argument("file")
    s.add_argument("vectors", help="JSON vector, JSON array of vectors, or JSON lines")
    s = sub.add_parser("kneser", parents=[common, system], help="pattern pigeonhole on parallel copies")
    s.add_argument("file")
    s.add_argument("--copies", type=int, default=1)
    s.add_argument("--surface", default="vertex-link",
                   help="vertex-link, ray:<index>, or a vector file (default vertex-link)")
    s = sub.add_parser("normalize", parents=[common], help="tube, then reduce along discs in faces")
    s.add_argument("file")
    s.add_argument("vector")
    s.add_argument("--script", help="tube script: tube-tet/tube-face directives")
    s.add_argument("--side", choices=("upper", "lower"), default="upper")
    s.add_argument("--step-limit", type=int)
    return p


def config_from_args(ns: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    cmd = ns.subcommand
    files = ns.files if cmd == "validate" else [ns.file]
    if cmd == "analyze":
        files.append(ns.vectors)
    if cmd == "normalize":
        files.append(ns.vector)
    cfg = RunConfig(cmd, files, output_format=ns.output_format,
                    allow_nonorientable=ns.allow_nonorientable)
    if hasattr(ns, "system"):
        cfg.system = System.parse(ns.system)
    for name in ("max_weight", "step_limit"):
        val = getattr(ns, name, None)
        if val is not None and val < 0:
            parser.error(f"--{name.replace('_', '-')} must be non-negative")
        setattr(cfg, name, val)
    cfg.octagon_total = getattr(ns, "octagons", None)
    if cfg.octagon_total is not None:
        if cfg.octagon_total < 0:
            parser.error("--octagons must be non-negative")
        if cfg.octagon_total > 0:
            cfg.system = System.TWO
    cfg.side = getattr(ns, "side", "upper")
    cfg.strict = not getattr(ns, "allow_same_axis", False)
    if cmd == "kneser":
        if ns.copies < 1:
            parser.error("--copies must be positive")
        cfg.extra.update(copies=ns.copies, surface=ns.surface)
    if cmd == "spheres":
        if ns.depth < 1:
            parser.error("--depth must be positive")
        cfg.extra["depth"] = ns.depth
    if cmd == "enumerate":
        cfg.extra["ray_limit"] = ns.ray_limit
    if cmd == "normalize":
        cfg.extra["script"] = ns.script
    return cfg


def run(cfg: RunConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        COMMANDS[cfg.subcommand](cfg, out)
    except DomainError as exc:
        err.write(f"normalkit: {exc}\n")
        return 1
    except (MatchingError, AdmissibilityError, CurveSystemError, ValueError) as exc:
        err.write(f"normalkit: {exc}\n")
        return 1
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    return run(config_from_args(ns, parser))


if __name__ == "__main__":
    sys.exit(main())
