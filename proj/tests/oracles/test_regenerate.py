#!/usr/bin/env python3
"""Tampering with a fixture is detected by --check and undone by a rerun."""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

HERE = pathlib.Path(__file__).resolve().parent
SCRIPT = HERE / "regenerate.py"


def run(*args):
    return subprocess.run([sys.executable, str(SCRIPT), *args], capture_output=True, text=True)


def main():
    clean = run("--check")
    if clean.returncode != 0:
        print(clean.stdout + clean.stderr)
        return 1
    with tempfile.TemporaryDirectory() as tmp:
        copy = pathlib.Path(tmp) / "fixtures"
        shutil.copytree(HERE.parent / "fixtures", copy)
        target = copy / "histogram.json"
        data = json.loads(target.read_text())
        data["complement"][0]["expected"][2] = 0.75
        target.write_text(json.dumps(data, indent=1) + "\n")
        original = (HERE.parent / "fixtures" / "histogram.json").read_bytes()

        check = run("--check", "--fixtures", str(copy))
        if check.returncode == 0 or "histogram.json" not in check.stdout or "complement" not in check.stdout:
            print("tampering was not reported:\n" + check.stdout)
            return 1
        fix = run("--fixtures", str(copy))
        if fix.returncode != 0 or "restored: histogram.json" not in fix.stdout:
            print("regeneration did not report the restore:\n" + fix.stdout)
            return 1
        if target.read_bytes() != original:
            print("regeneration did not restore the committed bytes")
            return 1
        if run("--check", "--fixtures", str(copy)).returncode != 0:
            print("tree still dirty after regeneration")
            return 1
    print("fixture regeneration round trip ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
