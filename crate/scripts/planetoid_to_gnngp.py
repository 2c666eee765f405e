#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (Cora, CiteSeer, PubMed) to a gnngp dataset directory.

Input is the directory holding the raw Planetoid files
``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}``. Output:

    edges.txt     undirected edge list, one "u v" pair per line, u < v
    features.csv  dense features as stored (or features.bin with --binary)
    targets.txt   class labels with a "# task=classification" header
    splits.json   the standard public split: 20 labels per class for training,
                  the next 500 nodes for validation, the 1000 test nodes

Requires numpy and scipy.

    python scripts/planetoid_to_gnngp.py --raw planetoid/data --name cora --out data/cora
"""

import argparse
import json
import pickle
import struct
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_raw(raw: Path, name: str):
    objects = {}
    for key in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        with open(raw / f"ind.{name}.{key}", "rb") as f:
            objects[key] = pickle.load(f, encoding="latin1")
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    return objects, test_index


def assemble(objects, test_index, name):
    x, y, tx, ty, allx, ally, graph = (objects[k] for k in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_sorted = np.sort(test_index)
    if name == "citeseer":
        # Some CiteSeer test nodes are isolated and missing from tx/ty; pad them with zeros.
        full = range(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full), tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((ally, ty))
    labels[test_index, :] = labels[test_sorted, :]

    n = features.shape[0]
    edges = set()
    for u, neighbors in graph.items():
        for v in neighbors:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    train = list(range(y.shape[0]))
    val = list(range(y.shape[0], y.shape[0] + 500))
    test = [int(i) for i in test_sorted if labels[i].sum() > 0]
    return features.toarray(), labels.argmax(axis=1), sorted(edges), {"train": train, "val": val, "test": test}


def write(out: Path, features, labels, edges, splits, binary: bool):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.txt", "w") as f:
        for u, v in edges:
            f.write(f"{u} {v}\n")
    if binary:
        with open(out / "features.bin", "wb") as f:
            f.write(struct.pack("<QQ", *features.shape))
            f.write(np.ascontiguousarray(features, dtype="<f8").tobytes())
    else:
        np.savetxt(out / "features.csv", features, delimiter=",", fmt="%.17g")
    with open(out / "targets.txt", "w") as f:
        f.write("# task=classification\n")
        f.writelines(f"{int(c)}\n" for c in labels)
    with open(out / "splits.json", "w") as f:
        json.dump(splits, f)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--raw", type=Path, required=True, help="directory with the ind.<name>.* files")
    p.add_argument("--name", required=True, choices=["cora", "citeseer", "pubmed"])
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--binary", action="store_true", help="write features.bin instead of features.csv")
    args = p.parse_args(argv)

    objects, test_index = load_raw(args.raw, args.name)
    features, labels, edges, splits = assemble(objects, test_index, args.name)
    write(args.out, features, labels, edges, splits, args.binary)
    print(
        f"{args.name}: {features.shape[0]} nodes, {len(edges)} undirected edges, "
        f"{features.shape[1]} features, {labels.max() + 1} classes, "
        f"split {len(splits['train'])}/{len(splits['val'])}/{len(splits['test'])}",
        file=sys.stderr,
    )


if __name__ == "__main__":
    main()
