"""Timing and agreement comparison of the boosted-tree kernel backends.

Trains the same one-vs-all model with the compiled backend and the numpy
fallback, times both phases, and checks that predictions agree bit for
bit. Run from the repository root:

    python3 benchmarks/bench_backends.py --samples 4000 --rounds 60
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from sonotag._kernels import available_backends, backend_name, set_backend
from sonotag.gbdt import GbdtParams, train_ova
from sonotag.synth import make_blobs


def time_backend(name: str, x, labels, params, repeats: int):
    set_backend(name)
    train_times = []
    predict_times = []
    model = None
    for _ in range(repeats):
        start = time.perf_counter()
        model = train_ova(x, labels, params)
        train_times.append(time.perf_counter() - start)
        start = time.perf_counter()
        scores = model.predict_scores(x)
        predict_times.append(time.perf_counter() - start)
    return model, scores, min(train_times), min(predict_times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=4000)
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--separation", type=float, default=4.0)
    parser.add_argument("--rounds", type=int, default=60)
    parser.add_argument("--depth", type=int, default=6)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    x, y = make_blobs(args.samples, args.dim, args.classes, args.separation, seed=args.seed)
    labels = [f"c{v}" for v in y]
    params = GbdtParams(max_depth=args.depth, n_rounds=args.rounds)
    backends = available_backends()
    print(f"problem: {args.samples} x {args.dim}, {args.classes} classes, "
          f"{args.rounds} rounds, depth {args.depth}, best of {args.repeats}")
    print(f"backends: {', '.join(backends)}")

    original = backend_name()
    results = {}
    try:
        for name in backends:
            model, scores, t_train, t_predict = time_backend(name, x, labels, params, args.repeats)
            results[name] = (scores, t_train, t_predict)
            print(f"  {name:>7}: train {t_train:8.3f}s   predict {t_predict:7.4f}s")
    finally:
        set_backend(original)

    if "cython" in results and "python" in results:
        agree = np.array_equal(results["cython"][0], results["python"][0])
        print(f"prediction agreement: {'bit-identical' if agree else 'MISMATCH'}")
        if not agree:
            raise SystemExit(1)
        speedup = results["python"][1] / results["cython"][1]
        print(f"train speedup (compiled vs fallback): {speedup:.2f}x")
    else:
        print("compiled backend not built; fallback timings only")


if __name__ == "__main__":
    main()
