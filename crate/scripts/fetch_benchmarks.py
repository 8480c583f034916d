#!/usr/bin/env python3
"""Fetch the binarized benchmark datasets used by the acceptance suite.

The suite expects, under data/ (or $LBARN_BENCH_DATA):

    <name>.train.amat  <name>.valid.amat  <name>.test.amat

for the dataset names listed in EXPECTED below. The .amat files are plain
text, one sample per line, space-separated 0/1 tokens -- exactly the dense
format the library reads.

These are the standard splits circulated in the autoregressive
density-estimation literature. This script tries a few known mirrors; if
they have moved, download any copy of the "binarized UCI evaluation
datasets" bundle (plus ocr-letters) and point --from at the archive, or
drop correctly named .amat files into data/ yourself. The shape table below
is verified either way.
"""

import argparse
import io
import os
import re
import shutil
import sys
import tarfile
import urllib.request
import zipfile

# name -> (n_train, n_valid, n_test, n_dims)
EXPECTED = {
    "adult": (5000, 1414, 26147, 123),
    "connect4": (16000, 4000, 47557, 126),
    "dna": (1400, 600, 1186, 180),
    "mushrooms": (2000, 500, 5624, 112),
    "nips-0-12": (400, 100, 1240, 500),
    "ocr-letters": (32152, 10000, 10000, 128),
    "rcv1": (40000, 10000, 150000, 150),
    "web": (14000, 3188, 32561, 300),
}

MIRRORS = [
    # MADE reference-implementation release bundle.
    "https://github.com/mgermain/MADE/releases/download/ITERATE/binary_datasets.tar.gz",
    "https://github.com/mgermain/MADE/releases/download/ITERATE/datasets.tar.gz",
]

ALIASES = {
    "connect-4": "connect4",
    "nips0-12": "nips-0-12",
    "nips_0_12": "nips-0-12",
    "ocr_letters": "ocr-letters",
    "ocrletters": "ocr-letters",
    "binarized_mushrooms": "mushrooms",
}


def canonical_name(raw):
    stem = raw.lower()
    stem = ALIASES.get(stem, stem)
    return stem if stem in EXPECTED else None


def shape_of(path):
    n = 0
    d = None
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            n += 1
            if d is None:
                d = len(line.split())
    return n, d


def install_amat_files(root, out_dir):
    """Find *.amat files under root and install them under canonical names."""
    installed = []
    pattern = re.compile(r"^(?P<name>.+?)[._](?P<split>train|valid|test)\.amat$")
    for dirpath, _, filenames in os.walk(root):
        for fname in filenames:
            m = pattern.match(fname)
            if not m:
                continue
            name = canonical_name(m.group("name"))
            if name is None:
                continue
            dst = os.path.join(out_dir, f"{name}.{m.group('split')}.amat")
            shutil.copy(os.path.join(dirpath, fname), dst)
            installed.append(dst)
    return installed


def extract_archive(blob, workdir):
    if blob[:2] == b"PK":
        with zipfile.ZipFile(io.BytesIO(blob)) as zf:
            zf.extractall(workdir)
    else:
        with tarfile.open(fileobj=io.BytesIO(blob), mode="r:*") as tf:
            tf.extractall(workdir)


def verify(out_dir):
    ok = True
    for name, (n_train, n_valid, n_test, d) in sorted(EXPECTED.items()):
        status = []
        for split, n_expected in (("train", n_train), ("valid", n_valid), ("test", n_test)):
            path = os.path.join(out_dir, f"{name}.{split}.amat")
            if not os.path.exists(path):
                status.append(f"{split}: MISSING")
                ok = False
                continue
            n, dim = shape_of(path)
            if (n, dim) != (n_expected, d):
                status.append(f"{split}: got {n}x{dim}, want {n_expected}x{d}")
                ok = False
            else:
                status.append(f"{split}: ok")
        print(f"{name:12s} {'  '.join(status)}")
    return ok


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory (default: data/)")
    parser.add_argument("--url", action="append", default=[], help="extra mirror URL to try first")
    parser.add_argument("--from", dest="local", help="local archive or directory to install from")
    parser.add_argument("--verify-only", action="store_true", help="only check shapes of existing files")
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    if args.verify_only:
        sys.exit(0 if verify(args.out) else 1)

    workdir = os.path.join(args.out, "_extract")
    if args.local:
        os.makedirs(workdir, exist_ok=True)
        if os.path.isdir(args.local):
            installed = install_amat_files(args.local, args.out)
        else:
            with open(args.local, "rb") as f:
                extract_archive(f.read(), workdir)
            installed = install_amat_files(workdir, args.out)
        print(f"installed {len(installed)} files from {args.local}")
    else:
        installed = []
        for url in args.url + MIRRORS:
            try:
                print(f"trying {url} ...")
                with urllib.request.urlopen(url, timeout=60) as resp:
                    blob = resp.read()
                os.makedirs(workdir, exist_ok=True)
                extract_archive(blob, workdir)
                installed = install_amat_files(workdir, args.out)
                if installed:
                    print(f"installed {len(installed)} files from {url}")
                    break
            except Exception as exc:  # noqa: BLE001 - report and try next mirror
                print(f"  failed: {exc}")
        if not installed:
            print(
                "\nNo mirror worked. Obtain the benchmark bundle manually and re-run\n"
                "with --from ARCHIVE, or place <name>.<split>.amat files in data/.\n"
                "Expected shapes:"
            )
            verify(args.out)
            sys.exit(1)

    shutil.rmtree(workdir, ignore_errors=True)
    sys.exit(0 if verify(args.out) else 1)


if __name__ == "__main__":
    main()
