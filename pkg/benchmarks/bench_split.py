"""Time the split-search kernel and single-tree growth on each available backend.

    python3 benchmarks/bench_split.py --size 10000 --repeat 5
"""
import argparse
import time

import numpy as np

from preambledet.channel_sim import ScenarioConfig
from preambledet.dataset import build_dataset
from preambledet.forest import TIE_TOL, _Tables, grow_tree, tree_rng
from preambledet.kernels import BACKENDS, get_best_split


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=10_000)
    ap.add_argument("--scheme", default="interf4", choices=("binary", "interf4"))
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    ds = build_dataset(ScenarioConfig("interference", 3, seed=1), args.scheme, args.size)
    X = np.ascontiguousarray(ds.X)
    y = ds.y.astype(np.intp)
    K = ds.num_classes
    idx = np.arange(len(y), dtype=np.intp)
    feats = np.array([0, 5, 9, 16], dtype=np.intp)
    tables = _Tables(len(y))
    rows = tree_rng(0, 0).integers(0, len(y), len(y))

    print(f"{len(y)} samples, {K} classes, backends: {', '.join(sorted(BACKENDS))}")
    results = {}
    for name in sorted(BACKENDS):
        split = get_best_split(name)
        t_split = best_of(lambda: split(X, y, idx, feats, K, tables.clogc, tables.log2n, TIE_TOL), args.repeat)
        t_tree = best_of(lambda: grow_tree(X[rows], y[rows], K, tree_rng(0, 0), backend=name), args.repeat)
        results[name] = (t_split, t_tree)
        print(f"{name:>7}: root split {t_split * 1e3:8.2f} ms   one tree {t_tree:7.3f} s")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: split x{py[0] / cy[0]:.1f}, tree x{py[1] / cy[1]:.1f}")


if __name__ == "__main__":
    main()
