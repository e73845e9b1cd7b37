"""Compare the numba kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Each case runs once per backend to warm up (numba compiles on first use), then
reports the best of ``--repeat`` timings.  Outputs of the two backends are
compared and any disagreement is reported.
"""

import argparse
import json
import os
import time
import warnings
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np

from ccrlab.classify import generate_family
from ccrlab.cone_lattice import Functional, Lattice, QuotientChart, orthant
from ccrlab.grid import GridWindow
from ccrlab.pspace import PSpace, diff_measure_mc


@contextmanager
def backend(name):
    old = os.environ.get("CCRLAB_DISABLE_NUMBA")
    os.environ["CCRLAB_DISABLE_NUMBA"] = "1" if name == "numpy" else "0"
    try:
        yield
    finally:
        if old is None:
            os.environ.pop("CCRLAB_DISABLE_NUMBA", None)
        else:
            os.environ["CCRLAB_DISABLE_NUMBA"] = old


def _scenario(d, basis):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate_family(d, None, basis, e=(1,) * d)


def cases():
    q2 = _scenario(2, [(1, -1)])
    q3 = _scenario(3, [(1, -1, 0), (0, 1, -1)])
    q3r1 = _scenario(3, [(1, -1, 0)])
    plane = PSpace(QuotientChart(Lattice.zero(2), Functional((1, 1))), orthant(2))
    plane_w = GridWindow(plane.chart, [0, 0], [32, 32], F(1, 8), 1)

    def mask_case(A, w):
        I, J = w.indices
        return lambda: A.mask_at(w, I, J)

    def mc_case(S, n):
        return lambda: diff_measure_mc(S.pspace, S.point_a, S.window, n_samples=n, seed=0)[0]

    yield "mask q2 (rank 1)", mask_case(q2.pspace, q2.ladder[-1])
    yield "mask q3 (rank 2)", mask_case(q3.pspace, q3.ladder[-1])
    yield "mask q3 (rank 1)", mask_case(q3r1.pspace, q3r1.ladder[-1])
    yield "mask plane (rank 0)", mask_case(plane, plane_w)
    yield "mc q3 (rank 2)", mc_case(q3, 40_000)


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", action="store_true")
    args = p.parse_args(argv)

    rows = []
    for name, fn in cases():
        res = {}
        for be in ("numba", "numpy"):
            with backend(be):
                t0 = time.perf_counter()
                fn()
                warm = time.perf_counter() - t0
                best, out = timed(fn, args.repeat)
            res[be] = (warm, best, out)
        agree = bool(np.array_equal(np.asarray(res["numba"][2]), np.asarray(res["numpy"][2])))
        rows.append({
            "case": name,
            "numbaFirstCall": res["numba"][0],
            "numba": res["numba"][1],
            "numpy": res["numpy"][1],
            "speedup": res["numpy"][1] / max(res["numba"][1], 1e-12),
            "agree": agree,
        })

    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'case':24s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'first call':>11s}  agree")
        for r in rows:
            print(f"{r['case']:24s} {r['numba']:10.4f} {r['numpy']:10.4f} {r['speedup']:8.1f} "
                  f"{r['numbaFirstCall']:11.3f}  {r['agree']}")
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
