"""Eight-column comparison on a synthetic dairy-shaped panel.

Run: python demos/04_dairy_comparison.py [--positive-skew]
"""
import argparse
import sys
import tempfile
from pathlib import Path

from sfpdl.cli import main

parser = argparse.ArgumentParser()
parser.add_argument("--positive-skew", action="store_true")
args = parser.parse_args()

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    flags = ["--positive-skew"] if args.positive_skew else []
    main(["fixture", "--n", "600", "--out", str(out / "fx"), *flags])
    code = main(["estimate", "--input", str(out / "fx/data.csv"), "--schema", str(out / "fx/schema.csv"),
                 "--compare", "--out", str(out / "table.csv")])
    sys.exit(code)
