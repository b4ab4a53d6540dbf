"""Benchmark the compiled kernel against its pure-Python fallback.

Usage: python benchmarks/compare_backends.py [--fast]

Times the hot kernels on identical inputs and prints per-op timings with
the speedup factor.  The compiled extension must be built (pip install -e .).
"""

import argparse
import math
import time

import numpy as np

from normrig import _pykernel as pure

try:
    from normrig import _core as comp
except ImportError:  # pragma: no cover
    comp = None


def pack(backend, p):
    kinds = {1.5: pure.K_3_2, 2.0: pure.K_TWO, 3.0: pure.K_THREE}
    k = kinds.get(p, pure.K_P)
    return backend.pack_norm(np.array([1.0]), np.array([k], dtype=np.intc),
                             np.array([p]), np.array([1.0 / p]),
                             np.array([0], dtype=np.intc),
                             np.array([0], dtype=np.intc),
                             np.zeros((0, 2)))


def timed(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_eval(backend, pn, reps):
    xy = np.random.default_rng(0).uniform(-3, 3, (2000, 2))
    return timed(lambda: backend.eval_many(pn, xy), reps) / len(xy)


def bench_intersect(backend, pn, reps):
    def run():
        for k in range(50):
            t = 2 * math.pi * k / 50
            backend.intersect(pn, 0.0, 0.0, 1.0, math.cos(t), math.sin(t),
                              1.0, 1, 1e-13, 80)
    return timed(run, reps) / 50


def bench_lm(backend, pn, reps):
    edges = np.array([(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 4), (3, 4)],
                     dtype=np.intc)
    targets = np.ones(len(edges))
    free = np.array([0, 1, 1, 1, 1], dtype=np.uint8)
    rng = np.random.default_rng(1)
    starts = rng.uniform(-1.5, 1.5, (reps, 5, 2))

    def run():
        for s in starts:
            pts = np.ascontiguousarray(s)
            backend.lm_edges(pn, pts, edges, targets, free, -1, -1, 0.0, 0.0,
                             60, 1e-12, 1e-3)
    t0 = time.perf_counter()
    run()
    return (time.perf_counter() - t0) / reps


def bench_falsify(use_pure, restarts):
    import importlib
    import os

    os.environ["NORMRIG_PURE"] = "1" if use_pure else "0"
    import normrig._backend
    importlib.reload(normrig._backend)
    import normrig.norms
    importlib.reload(normrig.norms)
    import normrig.witness
    importlib.reload(normrig.witness)
    import normrig.verify
    importlib.reload(normrig.verify)
    eucl = normrig.norms.p_norm(2)
    linf = normrig.norms.p_norm(math.inf)
    w = normrig.witness.build_rational(eucl, (0, 0), (2, 0), 2, 1.0)
    t0 = time.perf_counter()
    rep = normrig.verify.falsify(w, linf, restarts=restarts, seed=7)
    dt = time.perf_counter() - t0
    return dt, rep.violations_found


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fast", action="store_true")
    args = ap.parse_args()
    if comp is None:
        raise SystemExit("compiled kernel missing; run pip install -e . first")

    reps = 3 if args.fast else 10
    rows = []
    for p in (1.5, 2.0):
        pn_p = pack(pure, p)
        pn_c = pack(comp, p)
        te_p = bench_eval(pure, pn_p, reps)
        te_c = bench_eval(comp, pn_c, reps)
        rows.append((f"norm eval (p={p})", te_p, te_c))
        ti_p = bench_intersect(pure, pn_p, max(1, reps // 2))
        ti_c = bench_intersect(comp, pn_c, max(1, reps // 2))
        rows.append((f"sphere intersect (p={p})", ti_p, ti_c))
    pn_p = pack(pure, 2.0)
    pn_c = pack(comp, 2.0)
    n_lm = 20 if args.fast else 100
    rows.append(("lm refine (5 pts)", bench_lm(pure, pn_p, n_lm),
                 bench_lm(comp, pn_c, n_lm)))

    print(f"{'kernel op':<28} {'pure':>12} {'compiled':>12} {'speedup':>9}")
    for name, tp, tc in rows:
        print(f"{name:<28} {tp * 1e6:>10.2f}us {tc * 1e6:>10.2f}us "
              f"{tp / tc:>8.1f}x")

    restarts = 50 if args.fast else 300
    dt_c, v_c = bench_falsify(False, restarts)
    dt_p, v_p = bench_falsify(True, restarts)
    assert v_c == v_p, "backends disagree on violations"
    print(f"{'falsify q=2 sup-norm':<28} {dt_p:>10.2f}s  {dt_c:>10.2f}s  "
          f"{dt_p / dt_c:>8.1f}x   ({v_c} violations, {restarts} restarts)")


if __name__ == "__main__":
    main()
