"""Build 28x28 digit IDX files from the sklearn digits set.

The 8x8 source images are bilinearly upsampled to 28x28 and quantized to
uint8, then written as gzip IDX pairs (train and test splits). A stand-in
for environments where the full handwritten-digit corpus is not
downloadable; the file format and image geometry match it exactly.

Usage: python3 scripts/make_digits_idx.py [out_dir] [--test-fraction 0.165]
"""

import argparse
import os
import sys

import numpy as np

try:
    from sklearn.datasets import load_digits
except ImportError:
    sys.exit("this script needs scikit-learn (pip install scikit-learn)")

from scipy.ndimage import zoom

from phaseret.data import write_idx_images, write_idx_labels


def upsample(images8):
    out = np.empty((images8.shape[0], 28, 28))
    for i, img in enumerate(images8):
        out[i] = zoom(img / 16.0, 28 / 8, order=1)
    return np.rint(np.clip(out, 0.0, 1.0) * 255.0).astype(np.uint8)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", nargs="?", default="trainer/artifacts")
    parser.add_argument("--test-fraction", type=float, default=0.165)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    digits = load_digits()
    images = upsample(digits.images)
    labels = digits.target.astype(np.uint8)

    g = np.random.Generator(np.random.PCG64(args.seed))
    perm = g.permutation(images.shape[0])
    images, labels = images[perm], labels[perm]
    n_test = int(round(args.test_fraction * images.shape[0]))
    split = images.shape[0] - n_test

    os.makedirs(args.out_dir, exist_ok=True)
    out = lambda name: os.path.join(args.out_dir, name)
    write_idx_images(out("digits-train-images.idx.gz"), images[:split])
    write_idx_labels(out("digits-train-labels.idx.gz"), labels[:split])
    write_idx_images(out("digits-test-images.idx.gz"), images[split:])
    write_idx_labels(out("digits-test-labels.idx.gz"), labels[split:])
    print(f"wrote {split} train / {n_test} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
