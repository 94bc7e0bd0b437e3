"""Compare the compiled and numpy slice-statistics kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times ``window_stats`` on a default-size waterfall (100 x 1500) for the
three full bands and for 1 MHz slices, after checking both backends agree.
"""
import argparse
import time

import numpy as np

from rfids import _fallback

try:
    from rfids import _kernels
except ImportError:
    _kernels = None


def windows(width_cols, total=1500):
    starts = np.arange(0, total, width_cols, dtype=np.intp)
    return starts, np.minimum(starts + width_cols, total).astype(np.intp)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    m = np.ascontiguousarray(-90.0 + 2.0 * rng.standard_normal((100, 1500)))
    backends = [("python", _fallback.window_stats)]
    if _kernels is None:
        print("compiled extension not built; timing the numpy fallback only")
    else:
        backends.append(("cython", _kernels.window_stats))
    print(f"{'windows':<22}{'backend':<9}{'ms/call':>10}{'speedup':>9}")
    for label, width in (("3 bands x 500 cols", 500), ("30 slices x 50 cols", 50), ("300 slices x 5 cols", 5)):
        s, e = windows(width)
        ref = _fallback.window_stats(m, s, e)
        base = None
        for name, fn in backends:
            np.testing.assert_allclose(fn(m, s, e), ref, rtol=1e-12, atol=1e-9)
            dt = best_of(lambda: fn(m, s, e), args.repeat)
            base = base or dt
            print(f"{label:<22}{name:<9}{dt * 1e3:>10.3f}{base / dt:>8.1f}x")


if __name__ == "__main__":
    main()
