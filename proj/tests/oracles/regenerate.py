#!/usr/bin/env python3
"""Rebuild every derived fixture from its oracle script.

  regenerate.py            rewrite tests/fixtures, listing anything restored
  regenerate.py --check    fail (exit 1) if any fixture differs from its oracle
"""

import argparse
import importlib
import json
import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
ORACLES = [
    "autodiff_oracle",
    "affine_oracle",
    "bilinear_oracle",
    "color_oracle",
    "histogram_oracle",
    "idx_oracle",
    "units_oracle",
    "estimator_oracle",
    "synthetic_oracle",
]


def render(value):
    if isinstance(value, bytes):
        return value
    return (json.dumps(value, indent=1) + "\n").encode()


def differing_cases(old_bytes, new_bytes):
    """Names of the top-level entries (or whole file) that differ."""
    try:
        old, new = json.loads(old_bytes), json.loads(new_bytes)
    except ValueError:
        return ["<binary contents>"]
    if not isinstance(old, dict):
        return ["<whole file>"]
    return sorted(k for k in set(old) | set(new) if old.get(k) != new.get(k)) or ["<formatting>"]


def main(argv):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--check", action="store_true", help="compare only; do not write")
    parser.add_argument("--fixtures", type=pathlib.Path, default=HERE.parent / "fixtures")
    args = parser.parse_args(argv)

    sys.path.insert(0, str(HERE))
    problems = []
    for name in ORACLES:
        outputs = importlib.import_module(name).build()
        for rel, value in outputs.items():
            path = args.fixtures / rel
            data = render(value)
            old = path.read_bytes() if path.exists() else None
            if old == data:
                continue
            detail = "missing" if old is None else ", ".join(differing_cases(old, data))
            problems.append("%s (%s): %s" % (rel, name, detail))
            if not args.check:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(data)

    verb = "differs from oracle" if args.check else "restored"
    for p in problems:
        print("%s: %s" % (verb, p))
    if args.check and problems:
        return 1
    if not problems:
        print("all fixtures match their oracles")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
