#!/usr/bin/env python3
"""Convert the digit JSON files from the npm `mnist` package into IDX files.

Usage: make_mnist_idx.py <digits_dir> <out_dir>

The npm package (https://github.com/cazala/mnist) ships 10,000 MNIST digits
as per-class JSON arrays of 28x28 grayscale values in [0, 1]. This script
interleaves them with a fixed shuffle and writes standard big-endian IDX
containers: 9,000 training images and 1,000 test images.
"""
import json
import random
import struct
import sys
from pathlib import Path

SIDE = 28


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    digits_dir, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)

    examples = []
    for digit in range(10):
        flat = json.load(open(digits_dir / f"{digit}.json"))["data"]
        n = len(flat) // (SIDE * SIDE)
        for k in range(n):
            px = flat[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]
            img = [min(255, max(0, round(v * 255))) for v in px]
            examples.append((img, digit))

    random.Random(1234).shuffle(examples)
    train, test = examples[:-1000], examples[-1000:]

    write_idx_images(out_dir / "train-images-idx3-ubyte", [e[0] for e in train])
    write_idx_labels(out_dir / "train-labels-idx1-ubyte", [e[1] for e in train])
    write_idx_images(out_dir / "t10k-images-idx3-ubyte", [e[0] for e in test])
    write_idx_labels(out_dir / "t10k-labels-idx1-ubyte", [e[1] for e in test])
    print(f"wrote {len(train)} train / {len(test)} test images to {out_dir}")


if __name__ == "__main__":
    main()
