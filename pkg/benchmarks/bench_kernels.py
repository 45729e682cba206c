"""Compare the compiled and pure-Python generator kernels.

    python benchmarks/bench_kernels.py [--n 101] [--steps 2000] [--repeat 5]

Prints microseconds per generator call and per Euler step for every
available backend, the speedup over the Python fallback, and the largest
disagreement between backends on the same input.
"""

import argparse
import timeit

import numpy as np

from qmarket import kernels
from qmarket.market_model import gaussian_state, price_grid


def make_state(n: int) -> np.ndarray:
    rho = gaussian_state(n, price_grid(n, -1.0, 1.0), 0.05)
    # a few nonclassical steps so the off-diagonals are populated
    return kernels.get_backend("python").euler_steps(rho, 50, 0.004, 0.16, 0.1296, 0.1296, False)


def bench(backend: str, rho, args, periodic: bool) -> dict:
    gen = kernels.get_backend(backend)
    s2, nu2 = 0.16, 0.1296

    def one_call():
        gen.shift_generator(rho, s2, nu2, nu2, periodic)

    def stepping():
        gen.euler_steps(rho, args.steps, 0.004, s2, nu2, nu2, periodic)

    call = min(timeit.repeat(one_call, number=200, repeat=args.repeat)) / 200
    step = min(timeit.repeat(stepping, number=1, repeat=args.repeat)) / args.steps
    return {"call": call * 1e6, "step": step * 1e6}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()

    rho = make_state(args.n)
    backends = kernels.available_backends()
    for periodic in (False, True):
        mode = "periodic" if periodic else "hard-wall"
        print(f"N={args.n}, {mode}, {args.steps} steps per timing run")
        results = {b: bench(b, rho, args, periodic) for b in backends}
        base = results["python"]
        print(f"  {'backend':<8} {'us/call':>10} {'us/step':>10} {'speedup':>9}")
        for b, r in results.items():
            print(f"  {b:<8} {r['call']:10.1f} {r['step']:10.1f} {base['step'] / r['step']:8.1f}x")
        if len(backends) > 1:
            outs = [kernels.get_backend(b).euler_steps(rho, 100, 0.004, 0.16, 0.1296, 0.1296, periodic)
                    for b in backends]
            print(f"  max backend disagreement after 100 steps: {np.max(np.abs(outs[0] - outs[1])):.1e}")
        else:
            print("  compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
