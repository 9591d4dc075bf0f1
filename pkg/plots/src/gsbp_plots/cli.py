"""Command line entry: ``gsbp-plots render <figure-spec>...``

A figure spec is a small JSON document:

    {"kind": "conservation", "csv": "flat_bridge.csv", "out": "energy.png"}

kind is one of conservation | splitting_envelope | simplex_path; csv may be
a list of trajectory files for the conservation overlay.  Exit codes:
0 success, 2 bad spec, 3 render failure (missing columns, bad data).
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import KINDS, FigureSpec, render
from .readers import MissingColumnError


def load_spec(path: str) -> FigureSpec:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: figure spec must be an object")
    unknown = set(data) - {"kind", "csv", "out"}
    if unknown:
        raise ValueError(f"{path}: unknown fields {sorted(unknown)}")
    for field in ("kind", "csv", "out"):
        if field not in data:
            raise ValueError(f"{path}: missing field {field!r}")
    return FigureSpec(kind=data["kind"], csv=data["csv"], out=data["out"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gsbp-plots", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help=f"render figures; kinds: {', '.join(KINDS)}")
    p_render.add_argument("specs", nargs="+", metavar="figure-spec")
    args = parser.parse_args(argv)

    status = 0
    for path in args.specs:
        try:
            spec = load_spec(path)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = max(status, 2)
            continue
        try:
            out = render(spec)
            print(f"{path}: wrote {out}")
        except (MissingColumnError, ValueError, OSError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = max(status, 3)
    return status


if __name__ == "__main__":
    sys.exit(main())
