#!/usr/bin/env python3
"""Fetch the published Fashion-MNIST IDX files into a local directory.

Usage:
    python scripts/fetch_fashion_mnist.py [DEST]

DEST defaults to data/fashion-mnist. The four gzipped IDX files are
downloaded from the dataset's canonical mirror and left compressed (the
readers accept gzip transparently). Tests and the CLI look for them under
the path given by the PCPEEL_FASHION_MNIST_DIR environment variable, or
data/fashion-mnist relative to the working directory.
"""

import sys
import urllib.request
from pathlib import Path

BASE = "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/"
FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/fashion-mnist")
    dest.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        target = dest / name
        if target.exists():
            print(f"already present: {target}")
            continue
        print(f"fetching {BASE + name} -> {target}")
        urllib.request.urlretrieve(BASE + name, target)
    print(f"done; files in {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
