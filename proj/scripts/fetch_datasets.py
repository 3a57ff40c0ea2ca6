#!/usr/bin/env python3
"""Fetch the UCI benchmark files used by the experiments and convert them to
the loader CSV format (numeric features, 1-based integer class label last).

The original UCI archive is frequently unreachable, so the raw files are taken
from the `common-datasets` wheel on PyPI, which ships unmodified copies of the
UCI ecoli, glass, yeast and statlog-vehicle data.

    python3 scripts/fetch_datasets.py [--wheel path/to/common_datasets.whl] [--out data/uci]
"""

import argparse
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

PREFIX = "common_datasets/data/classification/"


def fetch_wheel(workdir):
    subprocess.check_call([sys.executable, "-m", "pip", "download", "common-datasets==0.3.10",
                           "--no-deps", "-d", workdir, "--timeout", "300"])
    return glob.glob(os.path.join(workdir, "common_datasets-*.whl"))[0]


def read(z, name):
    return z.read(PREFIX + name).decode("ascii")


def whitespace_rows(text, skip_first):
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if skip_first:
            parts = parts[1:]
        rows.append((parts[:-1], parts[-1]))
    return rows


def glass_rows(text):
    rows = []
    for line in text.splitlines():
        parts = line.strip().split(",")
        if len(parts) < 3:
            continue
        rows.append((parts[1:-1], parts[-1]))  # drop the id column
    return rows


def write_csv(path, rows):
    classes = sorted({label for _, label in rows}, key=lambda c: (not c.isdigit(), int(c) if c.isdigit() else 0, c))
    index = {c: i + 1 for i, c in enumerate(classes)}
    with open(path, "w") as out:
        for features, label in rows:
            out.write(",".join(features + [str(index[label])]) + "\n")
    return classes


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "uci"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        z = zipfile.ZipFile(wheel)
        sets = {
            "ecoli": whitespace_rows(read(z, "ecoli/ecoli.data.txt"), skip_first=True),
            "glass": glass_rows(read(z, "glass/glass.data.txt")),
            "yeast": whitespace_rows(read(z, "yeast/yeast.data.txt"), skip_first=True),
            "vehicle": whitespace_rows("".join(read(z, "vehicle/xa%s.dat.txt" % c) for c in "abcdefghi"),
                                       skip_first=False),
        }
    for name, rows in sets.items():
        classes = write_csv(os.path.join(args.out, name + ".csv"), rows)
        print("%-8s %5d examples  %2d classes  %s" % (name, len(rows), len(classes), " ".join(classes)))


if __name__ == "__main__":
    main()
