"""Compare the compiled and numpy integration kernels.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on the
built-in frames through both backends, and the endpoints are checked to agree.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from carnotcc import kernels, resolve_distribution


def cases(batch: int, segments: int):
    rng = np.random.default_rng(0)
    for name in ("heisenberg", "martinet", "plane:2-of-3"):
        D = resolve_distribution(name)
        x0 = rng.uniform(-0.3, 0.3, D.n)
        controls = rng.normal(size=(batch, segments, D.k))
        v = rng.normal(size=D.n)
        yield name, {
            "rollout_batch": lambda fp, D=D, x0=x0, c=controls: kernels.rollout_batch(D, x0, c, 1.0, 8,
                                                                                     force_python=fp),
            "rollout_path": lambda fp, D=D, x0=x0, c=controls[0]: kernels.rollout_path(D, x0, c, 1.0, 8,
                                                                                      force_python=fp),
            "projected_flow": lambda fp, D=D, x0=x0, v=v: kernels.projected_flow(D, x0, v, 1e-3, 1000,
                                                                                force_python=fp),
        }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=64, help="control sequences per batch rollout")
    parser.add_argument("--segments", type=int, default=16, help="piecewise-constant segments")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats; the best is reported")
    args = parser.parse_args()

    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the numpy backend can run")
    print(f"{'frame':<14}{'kernel':<16}{'numpy ms':>10}{'cython ms':>11}{'speedup':>9}{'max diff':>11}")
    for name, fns in cases(args.batch, args.segments):
        for kernel, fn in fns.items():
            py = min(timeit.repeat(lambda: fn(True), number=1, repeat=args.repeat)) * 1e3
            if kernels.BACKEND != "cython":
                print(f"{name:<14}{kernel:<16}{py:>10.2f}{'-':>11}{'-':>9}{'-':>11}")
                continue
            cy = min(timeit.repeat(lambda: fn(False), number=1, repeat=args.repeat)) * 1e3
            a, b = fn(True), fn(False)
            a = a[0] if isinstance(a, tuple) else a
            b = b[0] if isinstance(b, tuple) else b
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            print(f"{name:<14}{kernel:<16}{py:>10.2f}{cy:>11.3f}{py / cy:>8.1f}x{diff:>11.1e}")


if __name__ == "__main__":
    main()
