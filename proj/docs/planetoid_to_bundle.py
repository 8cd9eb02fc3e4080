# Copyright 2026 The CLNR Authors.
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
"""Converts raw Planetoid files (ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index})
into a clnr bundle directory with the public split.

    python3 docs/planetoid_to_bundle.py --raw planetoid/data --name cora --out data/cora

Needs numpy and scipy. Features are row-normalized to sum 1 unless
--raw-features is given.
"""

import argparse
import pathlib
import pickle
import struct
import sys

import numpy as np
import scipy.sparse as sp


def _load(raw: pathlib.Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def read_planetoid(raw: pathlib.Path, name: str):
    x, y, tx, ty, allx, ally, graph = (_load(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = np.sort(test_index)

    if name == "citeseer":
        # Isolated test nodes are missing from tx / ty; pad them with zero rows.
        full = np.arange(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full), x.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), y.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((ally, ty))
    labels[test_index, :] = labels[test_sorted, :]

    n = features.shape[0]
    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    test_set = set(int(i) for i in test_sorted)
    splits = {
        "train": list(range(y.shape[0])),
        "val": [i for i in range(y.shape[0], min(y.shape[0] + 500, n)) if i not in test_set],
        "test": [int(i) for i in test_sorted],
    }
    return sp.csr_matrix(features), labels, sorted(edges), splits


def write_bundle(out: pathlib.Path, features, onehot, edges, splits, normalize: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    dense = np.asarray(features.todense(), dtype=np.float64)
    if normalize:
        sums = dense.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        dense = dense / sums
    # Nodes without a label row (all zeros) get class 0; they are in no split.
    labels = onehot.argmax(axis=1)
    n, f = dense.shape
    (out / "meta.txt").write_text(
        f"n_nodes = {n}\nn_edges_directed = {2 * len(edges)}\nfeature_dim = {f}\nn_classes = {onehot.shape[1]}\n")
    (out / "edges.tsv").write_text("".join(f"{u}\t{v}\n" for u, v in edges))
    (out / "labels.tsv").write_text("".join(f"{int(c)}\n" for c in labels))
    for part, idx in splits.items():
        (out / f"{part}.idx").write_text("".join(f"{i}\n" for i in idx))
    with open(out / "features.bin", "wb") as fb:
        fb.write(struct.pack("<QQ", n, f))
        fb.write(dense.astype("<f4").tobytes(order="C"))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw", type=pathlib.Path, required=True, help="directory holding the ind.<name>.* files")
    ap.add_argument("--name", default="cora", help="dataset name inside the file names")
    ap.add_argument("--out", type=pathlib.Path, required=True, help="bundle directory to write")
    ap.add_argument("--raw-features", action="store_true", help="keep features unnormalized")
    args = ap.parse_args(argv)
    features, onehot, edges, splits = read_planetoid(args.raw, args.name)
    write_bundle(args.out, features, onehot, edges, splits, normalize=not args.raw_features)
    print(f"{args.out}: {features.shape[0]} nodes, {len(edges)} edges, {features.shape[1]} features, "
          f"{onehot.shape[1]} classes")
    return 0


if __name__ == "__main__":
    sys.exit(main())
