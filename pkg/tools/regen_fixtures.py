"""Regenerate corpus/expected from the command line, after checking it against the oracles.

Run from the repository root:  python3 tools/regen_fixtures.py
"""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402
from cli_helpers import invocations, run  # noqa: E402
from normalkit.coords import CoordinateVector, System, matching_matrix  # noqa: E402
from normalkit.enumeration import enumerate_bounded  # noqa: E402
from normalkit.triangulation import load_triangulation  # noqa: E402

EXPECTED = ROOT / "corpus" / "expected"


def check_rays(name, stdout, system):
    # the ray list must equal the extreme rays of the bounded solution set
    tri = load_triangulation(ROOT / "corpus" / f"{name}.tri")
    got = {tuple(CoordinateVector.from_json(json.loads(x)["vector"]).flat) for x in stdout.splitlines()}
    bounded = enumerate_bounded(tri, system, 30)
    want = oracles.extreme_rays(matching_matrix(tri, system), bounded)
    if system is System.ONE and got != want:
        raise SystemExit(f"{name}: ray list disagrees with the bounded oracle")


def main():
    EXPECTED.mkdir(exist_ok=True)
    for old in EXPECTED.iterdir():
        old.unlink()
    names = sorted(p.stem for p in (ROOT / "corpus").glob("*.tri"))
    for name in names:
        for i, (args, _, _) in enumerate(invocations(name)):
            res = run(args)
            if res.returncode != 0:
                raise SystemExit(f"{args}: {res.stderr.decode()}")
            if args[:3] == ["enumerate", "--system", "1n"]:
                check_rays(name, res.stdout.decode(), System.ONE)
            stem = EXPECTED / f"{name}__{i:02d}-{args[0]}"
            rel = [str(Path(a).relative_to(ROOT)) if Path(str(a)).is_absolute() else str(a) for a in args]
            stem.with_suffix(".args").write_text(json.dumps(rel) + "\n")
            stem.with_suffix(".out").write_bytes(res.stdout)
    print(f"wrote {len(list(EXPECTED.glob('*.out')))} fixtures")


if __name__ == "__main__":
    main()
