#!/usr/bin/env python3
"""Convert external datasets to the SLSRAW01 container (docs/raw_container.md).

Supported inputs:
  svhn       cropped-digit .mat file (train_32x32.mat / test_32x32.mat)
  imagedir   directory of class subfolders, one folder per label, images
             readable by Pillow (covers Flowers-style layouts)

Examples:
  convert_to_raw.py svhn train_32x32.mat train.raw
  convert_to_raw.py imagedir flowers/train train.raw --size 32
"""

import argparse
import struct
import sys
from pathlib import Path

import numpy as np


def write_raw(path, images, labels, class_count):
    """images: uint8 array (N, C, H, W); labels: int array (N,)."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.int64)
    if images.ndim != 4:
        raise ValueError("images must be (N, C, H, W)")
    n, c, h, w = images.shape
    if labels.shape != (n,):
        raise ValueError("label count does not match image count")
    if labels.min() < 0 or labels.max() >= class_count:
        raise ValueError("labels outside [0, class_count)")
    label_bytes = 1 if class_count <= 256 else 2
    with open(path, "wb") as f:
        f.write(b"SLSRAW01")
        f.write(struct.pack("<5I", c, h, w, n, class_count))
        f.write(struct.pack("<B", label_bytes))
        fmt = "<B" if label_bytes == 1 else "<H"
        for i in range(n):
            f.write(struct.pack(fmt, int(labels[i])))
            f.write(images[i].tobytes())
    print(f"{path}: {n} records, {c}x{h}x{w}, {class_count} classes")


def load_svhn(mat_path):
    from scipy.io import loadmat

    m = loadmat(mat_path)
    x = m["X"]  # (H, W, C, N)
    y = m["y"].ravel().astype(np.int64)
    y[y == 10] = 0  # SVHN stores digit 0 as label 10
    images = np.transpose(x, (3, 2, 0, 1))  # -> (N, C, H, W)
    return images, y, 10


def load_imagedir(root, size):
    from PIL import Image

    root = Path(root)
    classes = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not classes:
        sys.exit(f"{root}: no class subdirectories")
    images, labels = [], []
    for idx, cls in enumerate(classes):
        for p in sorted((root / cls).iterdir()):
            if not p.is_file():
                continue
            try:
                img = Image.open(p).convert("RGB")
            except OSError:
                continue
            if size:
                img = img.resize((size, size), Image.BILINEAR)
            a = np.asarray(img, dtype=np.uint8)  # (H, W, 3)
            images.append(np.transpose(a, (2, 0, 1)))
            labels.append(idx)
    if not images:
        sys.exit(f"{root}: no readable images")
    print("class order:", ", ".join(f"{i}={c}" for i, c in enumerate(classes)))
    return np.stack(images), np.array(labels), len(classes)


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("format", choices=["svhn", "imagedir"])
    ap.add_argument("input", help=".mat file or class-folder directory")
    ap.add_argument("output", help="output .raw path")
    ap.add_argument("--size", type=int, default=0,
                    help="resize images to SIZE x SIZE (imagedir only)")
    args = ap.parse_args()

    if args.format == "svhn":
        images, labels, nc = load_svhn(args.input)
    else:
        images, labels, nc = load_imagedir(args.input, args.size)
    write_raw(args.output, images, labels, nc)


if __name__ == "__main__":
    main()
