"""Time the numba kernels against their numpy twins.

Run:  python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from conelip import _kernels as K


def _best(fn, args, repeat):
    fn(*args)  # warm-up (compilation for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    X = rng.normal(size=(200_000, 8))
    A, b = rng.normal(size=(16, 8)), rng.normal(size=16)
    w = rng.uniform(0.5, 2.0, size=8)
    F = rng.normal(size=(64, 8))
    t = np.sort(rng.uniform(-1, 1, size=3_000))
    tg = np.linspace(-1, 1, 2_000_001)
    num, den = np.abs(rng.normal(size=1_000_000)), np.abs(rng.normal(size=1_000_000))
    return [
        ("max_affine_eval", "max_affine_eval", (A, b, X)),
        ("weighted_sup", "weighted_sup", (w, X)),
        ("weighted_l1", "weighted_l1", (w, X)),
        ("gauge", "gauge", (F, X)),
        ("lp_quasi", "lp_quasi", (0.5, X)),
        ("max_pairwise_slope (3e3 pts)", "max_pairwise_slope", (t, t * t)),
        ("max_adjacent_slope (2e6 pts)", "max_adjacent_slope", (tg, tg * tg)),
        ("ratio_max", "ratio_max", (num, den, 0.0)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}  agree")
    for label, name, fargs in cases(rng):
        f_np, f_nb = getattr(K, name + "_np"), getattr(K, name + "_nb")
        fargs = tuple(K._f64(a) if isinstance(a, np.ndarray) else a for a in fargs)
        t_np = _best(f_np, fargs, args.repeat)
        t_nb = _best(f_nb, fargs, args.repeat)
        agree = np.allclose(np.asarray(f_np(*fargs), dtype=float), np.asarray(f_nb(*fargs), dtype=float),
                            rtol=1e-12, atol=1e-12)
        print(f"{label:32s} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.1f}  {agree}")


if __name__ == "__main__":
    main()
