"""Compiled vs pure-Python kernels: timing and agreement.

    python benchmarks/bench_kernels.py [--repeat N] [--users K]

Builds the QP subproblem of a real SQP iterate, then times ``solve_qp`` and
``eval_constraints`` from both backends and a full ``sqp_solve`` under each.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from semcast import _kernels_py
from semcast.channel import draw_channel
from semcast.config import default_scenario
from semcast.harness import assign_intents
from semcast.optimizer.problem import LatencyProblem
from semcast.optimizer.sqp import _initial_hessian, _initial_point, SqpOptions

try:
    from semcast import _kernels as compiled
except ImportError:
    compiled = None


def _instance(K, seed):
    rng = np.random.default_rng(seed)
    sc = default_scenario(assign_intents(K, 35, "distinct-single", rng), rng.uniform(150, 550, K))
    return sc, draw_channel(sc.radio, fading="mean")


def _full_solve_ms(K, trials, pure):
    code = (
        "import time, numpy as np\n"
        "from semcast.optimizer import sqp_solve\n"
        f"import importlib.util, sys; sys.path.insert(0, {os.path.dirname(__file__)!r})\n"
        "from bench_kernels import _instance\n"
        f"cases = [_instance({K}, s) for s in range({trials})]\n"
        "t = time.perf_counter()\n"
        "for sc, ch in cases: sqp_solve(sc, ch)\n"
        f"print((time.perf_counter() - t) / {trials} * 1e3)\n"
    )
    env = dict(os.environ, SEMCAST_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--users", type=int, default=10)
    ap.add_argument("--solves", type=int, default=20)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the fallback is available")
        return 1

    sc, ch = _instance(args.users, 0)
    prob = LatencyProblem(sc, ch)
    x = _initial_point(prob, SqpOptions())
    kargs = (x, prob.ns, prob.K, prob.lat_user, prob.lat_stream, prob.lat_off, prob.lat_coef,
             prob.lat_alpha, prob.qa, prob.qb, prob.qc, prob.qt, prob.pfloor)
    c, J = _kernels_py.eval_constraints(*kargs)
    H = _initial_hessian(prob, x)
    g = prob.objective_gradient()

    print(f"problem: K={prob.K}, n={prob.n} variables, m={prob.m} constraint rows")
    print(f"{'kernel':<18} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8} {'max |diff|':>11}")
    for name, fn_py, fn_c, a in (
        ("eval_constraints", _kernels_py.eval_constraints, compiled.eval_constraints, kargs),
        ("solve_qp", _kernels_py.solve_qp, compiled.solve_qp, (H, g, J, c)),
    ):
        tp = min(timeit.repeat(lambda: fn_py(*a), number=args.repeat // 10 or 1, repeat=3)) / (args.repeat // 10 or 1)
        tc = min(timeit.repeat(lambda: fn_c(*a), number=args.repeat, repeat=3)) / args.repeat
        rp, rc = fn_py(*a), fn_c(*a)
        diff = max(float(np.max(np.abs(np.asarray(u) - np.asarray(v)))) for u, v in zip(rp[:2], rc[:2]))
        print(f"{name:<18} {tp * 1e3:>12.4f} {tc * 1e3:>12.4f} {tp / tc:>8.1f} {diff:>11.2e}")

    py_ms = _full_solve_ms(args.users, args.solves, pure=True)
    cy_ms = _full_solve_ms(args.users, args.solves, pure=False)
    print(f"{'sqp_solve':<18} {py_ms:>12.3f} {cy_ms:>12.3f} {py_ms / cy_ms:>8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
