"""Compare the compiled and pure-Python elementwise kernels.

Usage::

    python benchmarks/bench_kernels.py [--rows 20480] [--cols 102] [--repeat 7]

Times each kernel on a residual matrix of the given shape (the default is
the size of a 102-frame 160 x 128 video), then one short robust PCA solve
per backend. Prints the best of ``--repeat`` runs and the speed-up.
"""
import argparse
import timeit

import numpy as np

import robustrep.penalties as pen
from robustrep import PenaltySpec, SolveConfig, _fallback
from robustrep._backend import BACKEND, kernels
from robustrep.rpca import RpcaInput, rpca_solve


def kernel_cases(mod, r, grad, out):
    return {
        "huber_sum": lambda: mod.huber_sum(r, 0.15),
        "huber_sum_grad": lambda: mod.huber_sum_grad(r, 0.15, grad),
        "tiber_sum": lambda: mod.tiber_sum(r, 10.0, 0.03),
        "tiber_sum_grad": lambda: mod.tiber_sum_grad(r, 10.0, 0.03, grad),
        "soft_threshold": lambda: mod.soft_threshold(r, 0.15, out),
    }


def best_time(fn, repeat, number=1):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def solve_time(mod, Y, repeat):
    saved = pen.kernels
    pen.kernels = mod
    try:
        inp = RpcaInput(Y, 10, PenaltySpec.tiber(10.0, 0.03))
        cfg = SolveConfig(max_iters=20, tol=1e-300)
        return best_time(lambda: rpca_solve(inp, cfg), repeat)
    finally:
        pen.kernels = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--rows", type=int, default=20480)
    ap.add_argument("--cols", type=int, default=102)
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    # the kernels work on flat C-contiguous buffers
    r = 0.1 * rng.standard_normal(args.rows * args.cols)
    grad = np.empty_like(r)
    out = np.empty_like(r)

    if BACKEND != "cython":
        print("compiled extension not available; only the Python kernels are timed")
    mods = {"python": _fallback}
    if BACKEND == "cython":
        mods["cython"] = kernels

    print(f"residual matrix {args.rows} x {args.cols}, best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in mods) + f"{'speed-up':>10}")
    for name in kernel_cases(_fallback, r, grad, out):
        times = {m: best_time(kernel_cases(mod, r, grad, out)[name], args.repeat) for m, mod in mods.items()}
        row = f"{name:<16}" + "".join(f"{1e3 * t:>10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)

    Y = rng.random((args.rows, args.cols))
    times = {m: solve_time(mod, Y, max(1, args.repeat // 3)) for m, mod in mods.items()}
    row = f"{'rpca 20 sweeps':<16}" + "".join(f"{t:>11.2f}s" for t in times.values())
    if "cython" in times:
        row += f"{times['python'] / times['cython']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
