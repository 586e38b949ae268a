#!/usr/bin/env python3
"""Write a 5,000-image MNIST subset as gzipped IDX files.

The images come from the ``mnist_5k.csv.gz`` sample bundled with the
mlxtend wheel (500 images per digit, drawn from the canonical MNIST
training set). The rows are shuffled with a fixed seed and split into a
1,000-image training file and a 4,000-image test file.

    python3 tools/make_mnist_subset.py --out data/mnist_subset
"""
import argparse
import glob
import gzip
import os
import random
import struct
import subprocess
import tempfile
import zipfile


def find_wheel(cache):
    hits = glob.glob(os.path.join(cache, "mlxtend-*.whl"))
    if hits:
        return hits[0]
    subprocess.run(["pip", "download", "--no-deps", "-d", cache, "mlxtend"], check=True)
    return glob.glob(os.path.join(cache, "mlxtend-*.whl"))[0]


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mnist_subset")
    ap.add_argument("--train", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20171)
    ap.add_argument("--cache", default=os.path.join(tempfile.gettempdir(), "wbb_wheels"))
    args = ap.parse_args()

    os.makedirs(args.cache, exist_ok=True)
    with zipfile.ZipFile(find_wheel(args.cache)) as z:
        text = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    rows = [list(map(int, line.split(","))) for line in text.splitlines() if line]
    random.Random(args.seed).shuffle(rows)

    os.makedirs(args.out, exist_ok=True)
    splits = {"train": rows[: args.train], "t10k": rows[args.train :]}
    for name, part in splits.items():
        pixels = [p for r in part for p in r[:784]]
        labels = [r[784] for r in part]
        write_idx(os.path.join(args.out, f"{name}-images-idx3-ubyte.gz"), 0x803, (len(part), 28, 28), pixels)
        write_idx(os.path.join(args.out, f"{name}-labels-idx1-ubyte.gz"), 0x801, (len(part),), labels)
        print(f"{name}: {len(part)} images")


if __name__ == "__main__":
    main()
