#!/usr/bin/env python3
"""Build a 10k-image MNIST subset in IDX format from the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist) ships 10,000 MNIST
digits as JSON arrays of pixel/255 values rounded to three decimals. That
rounding is finer than one grey level, so the original bytes are recovered
exactly. Output: 9000 training and 1000 held-out images, interleaved with a
fixed seed so both splits are class-balanced.

    python3 scripts/make_mnist_subset.py <npm-package-dir> data/mnist
"""
import json
import random
import struct
import sys
from pathlib import Path

TRAIN = 9000


def main():
    src = Path(sys.argv[1]) / "src" / "digits"
    out = Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    samples = []
    for digit in range(10):
        raw = json.load(open(src / f"{digit}.json"))["data"]
        for k in range(len(raw) // 784):
            px = bytes(int(round(v * 255)) for v in raw[k * 784:(k + 1) * 784])
            samples.append((px, digit))
    random.Random(20190101).shuffle(samples)
    splits = {"train": samples[:TRAIN], "t10k": samples[TRAIN:]}
    for name, rows in splits.items():
        with open(out / f"{name}-images-idx3-ubyte", "wb") as f:
            f.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
            for px, _ in rows:
                f.write(px)
        with open(out / f"{name}-labels-idx1-ubyte", "wb") as f:
            f.write(struct.pack(">II", 0x801, len(rows)))
            f.write(bytes(label for _, label in rows))
        print(f"{name}: {len(rows)} images")


if __name__ == "__main__":
    main()
