#!/usr/bin/env python3
"""Regenerate the data/ directory.

Writes:
  data/wdbc.csv            Breast Cancer Wisconsin (Diagnostic), standard
                           32-column layout: ID, diagnosis (M/B), 30 features.
                           Source: scikit-learn's bundled copy of the UCI data.
  data/mnist/train-images-idx3-ubyte   2000-sample MNIST training subset (IDX)
  data/mnist/train-labels-idx1-ubyte
  data/mnist/test-images-idx3-ubyte    1000-sample test subset (IDX)
  data/mnist/test-labels-idx1-ubyte

The MNIST subset is built from the `mnist` npm package, which bundles the
original digit images as JSON (grayscale values rounded to 3 decimals of
pixel/255; rounding v*255 recovers the original byte exactly). Run
`npm pack mnist && tar xzf mnist-*.tgz` first and pass the package dir.
Samples are interleaved round-robin across digit classes so both subsets
are class-balanced; train and test are disjoint.
"""

import argparse
import json
import os
import struct
import sys


def write_wdbc(out_path):
    from sklearn.datasets import load_breast_cancer

    ds = load_breast_cancer()
    # sklearn: target 0 = malignant, 1 = benign; WDBC diagnosis letters M/B.
    with open(out_path, "w") as f:
        for i, (row, t) in enumerate(zip(ds.data, ds.target)):
            diag = "M" if t == 0 else "B"
            feats = ",".join(repr(float(v)) for v in row)
            f.write(f"{i + 1},{diag},{feats}\n")
    print(f"wrote {out_path}: {len(ds.data)} samples")


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def write_mnist(pkg_dir, out_dir, n_train, n_test):
    per_digit = []
    for d in range(10):
        with open(os.path.join(pkg_dir, "src", "digits", f"{d}.json")) as f:
            flat = json.load(f)["data"]
        n = len(flat) // 784
        imgs = [
            [min(255, max(0, round(v * 255))) for v in flat[i * 784 : (i + 1) * 784]]
            for i in range(n)
        ]
        per_digit.append(imgs)
        print(f"digit {d}: {n} samples")

    # Round-robin interleave; first n_train go to train, next n_test to test.
    order = []
    idx = [0] * 10
    while len(order) < n_train + n_test:
        for d in range(10):
            if idx[d] < len(per_digit[d]):
                order.append((d, idx[d]))
                idx[d] += 1
                if len(order) == n_train + n_test:
                    break

    train, test = order[:n_train], order[n_train : n_train + n_test]
    os.makedirs(out_dir, exist_ok=True)
    write_idx_images(
        os.path.join(out_dir, "train-images-idx3-ubyte"),
        [per_digit[d][i] for d, i in train],
    )
    write_idx_labels(
        os.path.join(out_dir, "train-labels-idx1-ubyte"), [d for d, _ in train]
    )
    write_idx_images(
        os.path.join(out_dir, "test-images-idx3-ubyte"),
        [per_digit[d][i] for d, i in test],
    )
    write_idx_labels(
        os.path.join(out_dir, "test-labels-idx1-ubyte"), [d for d, _ in test]
    )
    print(f"wrote {out_dir}: {n_train} train / {n_test} test")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mnist-pkg", help="extracted npm mnist package dir")
    ap.add_argument("--out", default="data")
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=1000)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    write_wdbc(os.path.join(args.out, "wdbc.csv"))
    if args.mnist_pkg:
        write_mnist(
            args.mnist_pkg, os.path.join(args.out, "mnist"), args.n_train, args.n_test
        )
    else:
        print("no --mnist-pkg given; skipping MNIST subset", file=sys.stderr)


if __name__ == "__main__":
    main()
