"""Compare the numba and numpy kernel backends.

Times every hot kernel on both paths (after a warm-up call that triggers JIT
compilation), checks that the outputs agree and then runs one end-to-end JSR
search under each dispatch mode in a subprocess, since the backend is fixed
at import time by ``SDTK_DISABLE_NUMBA`` and ``SDTK_NUMBA_ALL``.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from sdtk import _kernels as K

END_TO_END = (
    "import time; from sdtk import build_example3_matrices, jsr_bounds, BACKEND;"
    "m = build_example3_matrices(2.0, 1.0, 0.4, -1.5); jsr_bounds(m, 1e-2);"
    "t = time.perf_counter(); b = jsr_bounds(m, 1e-3, max_depth=40, max_nodes=2 * 10**6);"
    "print(BACKEND, time.perf_counter() - t, b.lower, b.upper)"
)


def cases(rng):
    stack = rng.standard_normal((20000, 4, 4))
    members = rng.standard_normal((2, 4, 4)) / 2.5
    parents = rng.standard_normal((8192, 4, 4)) / 2.5
    scores = np.full(len(parents), np.inf)
    arrivals = np.arange(200000) + rng.integers(0, 122, 200000)
    labels = rng.integers(0, 2, 100000)
    grid = np.round(np.arange(-300, 301) * 0.01, 12)
    return {
        "spectral_radii": ((stack,), lambda f: f(stack)),
        "spectral_norms": ((stack,), lambda f: f(stack)),
        "expand_level": (None, lambda f: f(parents, members, scores, 6)[1]),
        "arrival_mask": (None, lambda f: f(arrivals, 200000)),
        "iterate": (None, lambda f: f(members, labels, np.ones(4))),
        "rotation_grid_radii": (None, lambda f: f(math.pi / 60, grid, grid)),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not K.HAVE_NUMBA:
        sys.exit("numba backend unavailable (not installed or SDTK_DISABLE_NUMBA set)")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, (_, call) in cases(rng).items():
        f_np = getattr(K, f"numpy_{name}")
        f_nb = getattr(K, f"numba_{name}")
        ref, got = call(f_np), call(f_nb)  # warm-up compiles the numba kernel
        diff = float(np.max(np.abs(np.asarray(ref, float) - np.asarray(got, float)))) if np.size(ref) else 0.0
        t_np = min(timeit.repeat(lambda: call(f_np), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: call(f_nb), number=1, repeat=args.repeat))
        print(f"{name:<22}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.2f}{diff:>14.2e}")

    print("\nend-to-end jsr_bounds (Example 3, a=2, eps=1e-3):")
    for disable, everything in (("1", "0"), ("0", "0"), ("0", "1")):
        env = dict(os.environ, SDTK_DISABLE_NUMBA=disable, SDTK_NUMBA_ALL=everything)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, secs, lo, hi = out.stdout.split()
        print(f"  {backend:<10} {float(secs):8.3f} s  bounds [{float(lo):.6f}, {float(hi):.6f}]")


if __name__ == "__main__":
    main()
