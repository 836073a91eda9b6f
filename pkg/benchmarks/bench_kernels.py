"""Time the compiled kernels against the NumPy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

Prints one line per kernel with best-of-N wall times and the speedup, after
checking that both backends agree.
"""
import argparse
import time

import numpy as np

from torusflow import accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(quick):
    rng = np.random.default_rng(0)
    s = 4 if quick else 1
    n_tg, n_src = 2000 // s, 2000 // s
    tg = rng.normal(size=(n_tg, 3)) * 5
    src = rng.normal(size=(n_src, 3))
    f = rng.normal(size=(n_src, 3))
    yield "stokeslet_sum", lambda b: accel.stokeslet_sum(tg, src, f, 1.0, 0.0, backend=b)

    modes = np.arange(1, 5)
    h = rng.normal(size=(4, n_src // 4, 3)) + 0j
    yield "oscillatory_sum", lambda b: accel.oscillatory_sum(tg[: n_tg // 4], src[: n_src // 4], modes, 1.0,
                                                             h_src=h, backend=b)

    X = rng.normal(size=(4096 // s, 8, 16)) + 1j * rng.normal(size=(4096 // s, 8, 16))
    signs = rng.choice([-1.0, 1.0], size=(256, 8))
    yield "rademacher_norms", lambda b: accel.rademacher_norms(X, signs, 2.0, backend=b)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    if accel.BACKEND != "native":
        print("compiled kernels unavailable, only the python backend can run")
    print(f"threads={accel.num_threads()}")
    print(f"{'kernel':<18}{'python [s]':>12}{'native [s]':>12}{'speedup':>10}")
    for name, fn in cases(args.quick):
        tp, ref = best_of(lambda: fn("python"), args.repeat)
        if accel.BACKEND != "native":
            print(f"{name:<18}{tp:>12.4f}{'-':>12}{'-':>10}")
            continue
        tn, out = best_of(lambda: fn("native"), args.repeat)
        pairs = zip(out, ref) if isinstance(ref, tuple) else [(out, ref)]
        gap = max(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300) for a, b in pairs)
        if gap > 1e-10:
            raise SystemExit(f"{name}: backends disagree (relative gap {gap:.2e})")
        print(f"{name:<18}{tp:>12.4f}{tn:>12.4f}{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
