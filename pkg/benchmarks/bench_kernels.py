"""Compare the compiled and pure-numpy generator kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from seaqt import _backend
from seaqt.generator import SystemModel
from seaqt.operators import random_density, random_hermitian
from seaqt.propagator import IntegratorConfig, evolve


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--calls", type=int, default=2000)
    args = ap.parse_args()

    if "cython" not in _backend.BACKENDS:
        print("compiled kernels not built; only the python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<28s}" + "".join(f"{b:>12s}" for b in _backend.BACKENDS) + "     speedup")
    for dim in (2, 4, 8, 16):
        h = random_hermitian(dim, rng)
        n = np.diag(rng.integers(0, 3, dim).astype(float))
        rho = random_density(dim, rng)
        p = np.sort(np.linalg.eigvalsh(rho))[::-1]
        target = random_hermitian(dim, rng)
        ops = np.stack([h, n])
        timings = {}
        for name in _backend.BACKENDS:
            _backend.set_backend(name)
            timings[name] = _time(lambda: [_backend.project_dissipator(p, target, ops, 1.0) for _ in range(args.calls)], args.repeat)
        _row(f"project_dissipator d={dim}", timings, args.calls)

    for dim in (2, 4, 8):
        model = SystemModel(random_hermitian(dim, rng))
        rho = random_density(dim, rng)
        cfg = IntegratorConfig(stop_on_converged=False)
        timings = {}
        for name in _backend.BACKENDS:
            _backend.set_backend(name)
            timings[name] = _time(lambda: evolve(rho, model, 5.0, cfg), max(1, args.repeat // 2))
        _row(f"evolve t=5 d={dim}", timings, 1)


def _row(label, timings, calls):
    per = {k: v / calls for k, v in timings.items()}
    line = f"{label:<28s}" + "".join(f"{v * 1e6:>10.1f}us" for v in per.values())
    if "cython" in per:
        line += f"   x{per['python'] / per['cython']:.2f}"
    print(line)


if __name__ == "__main__":
    main()
