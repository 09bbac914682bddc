"""Compiled vs pure-Python flow kernels on the same chaotic trajectory.

    python3 benchmarks/bench_kernels.py --t-max 1000 --repeat 3

Reports the best wall time of each kernel for plain integration, Poincare
sections and the Lyapunov tangent flow, the speedup, and how far the two
results are apart.  Both kernels run the same DOP853 scheme, but on a
chaotic orbit last-bit differences grow like exp(lambda_L t), so the state
difference is only small for short runs; the exponent stays close.
"""

import argparse
import json
import time

import numpy as np

from dickechaos import classical as cl
from dickechaos.model import AncillaState, ModelParams, effective_params


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-max", type=float, default=1000.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.3)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    args = ap.parse_args(argv)

    if "compiled" not in cl.KERNELS:
        raise SystemExit("compiled kernel not built; reinstall with Cython available")
    eff = effective_params(ModelParams(lam=args.lam), AncillaState.from_net(args.n))
    fp = cl.flow_params(eff)
    y0 = cl.sample_energy_shell(-1.0, 1, args.seed, fp)[0]
    T = args.t_max

    jobs = {
        "integrate": lambda b: cl.integrate(y0, T, fp, samples=11, backend=b),
        "sections": lambda b: cl.poincare_section([y0], -1.0, T, fp, backend=b)[0],
        "lyapunov": lambda b: cl.lyapunov_run(y0, T, fp, backend=b),
    }

    def gap(name, a, b):
        if name == "integrate":
            return float(np.abs(a.points[-1] - b.points[-1]).max())
        if name == "sections":
            k = min(len(a), len(b))
            return float(np.abs(a.crossings[:k] - b.crossings[:k]).max()) if k else 0.0
        return abs(a.exponent - b.exponent)

    rows = []
    for name, job in jobs.items():
        tc, rc = best_of(lambda: job("compiled"), args.repeat)
        tp, rp = best_of(lambda: job("python"), args.repeat)
        rows.append({"kernel": name, "compiled_s": tc, "python_s": tp, "speedup": tp / tc,
                     "max_difference": gap(name, rc, rp)})

    if args.json:
        print(json.dumps({"t_max": T, "lambda": args.lam, "n": args.n, "rows": rows}, indent=2))
        return
    print(f"omega t = {T:g}, lambda = {args.lam}, n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<10} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8} {'max diff':>10}")
    for r in rows:
        print(f"{r['kernel']:<10} {r['compiled_s']:>13.4f} {r['python_s']:>11.3f} "
              f"{r['speedup']:>8.0f} {r['max_difference']:>10.1e}")


if __name__ == "__main__":
    main()
