#!/usr/bin/env python3
# Copyright 2026 The lipcert Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Builds an MNIST subset in IDX format from the npm `mnist` package.

The package embeds 10000 genuine MNIST digits (pixel values p/255 rounded
to three decimals, recovered exactly via round(v*255)). The script shuffles
them deterministically and writes a train/test split as the four standard
IDX files. When official full-size IDX files are available, point the
configs at those instead; the loader accepts both.
"""

import argparse
import json
import pathlib
import random
import struct
import subprocess
import sys
import tempfile


def load_digits(pkg_dir: pathlib.Path):
    samples = []
    for digit in range(10):
        path = pkg_dir / "src" / "digits" / f"{digit}.json"
        flat = json.loads(path.read_text())["data"]
        if len(flat) % 784 != 0:
            raise SystemExit(f"{path}: length {len(flat)} is not a multiple of 784")
        for off in range(0, len(flat), 784):
            pixels = bytes(round(v * 255) for v in flat[off : off + 784])
            samples.append((pixels, digit))
    return samples


def write_idx(images_path: pathlib.Path, labels_path: pathlib.Path, samples):
    with open(images_path, "wb") as f:
        f.write(struct.pack(">iiii", 0x803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">ii", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def ensure_package(explicit: str | None) -> pathlib.Path:
    if explicit:
        return pathlib.Path(explicit)
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="mnist-npm-"))
    subprocess.run(
        ["npm", "install", "--no-save", "--prefix", str(tmp), "mnist"],
        check=True,
        stdout=subprocess.DEVNULL,
    )
    return tmp / "node_modules" / "mnist"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/mnist", help="output directory")
    ap.add_argument("--train-count", type=int, default=8000)
    ap.add_argument("--test-count", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0, help="shuffle seed")
    ap.add_argument(
        "--package-dir", default=None, help="existing npm mnist package checkout"
    )
    args = ap.parse_args()

    samples = load_digits(ensure_package(args.package_dir))
    if args.train_count + args.test_count > len(samples):
        raise SystemExit(
            f"requested {args.train_count}+{args.test_count} samples, "
            f"only {len(samples)} available"
        )
    random.Random(args.seed).shuffle(samples)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train = samples[: args.train_count]
    test = samples[args.train_count : args.train_count + args.test_count]
    write_idx(out / "train-images-idx3-ubyte", out / "train-labels-idx1-ubyte", train)
    write_idx(out / "t10k-images-idx3-ubyte", out / "t10k-labels-idx1-ubyte", test)
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
