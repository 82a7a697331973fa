"""Compare the numba and numpy RK4 backends on the fundamental-system kernel.

Usage::

    python3 benchmarks/bench_kernels.py [--mus 64] [--mu-max 30] [--repeat 3]

Reports wall time per batch, RK4 steps per second and the max difference
between the two backends.
"""

import argparse
import time

import numpy as np

from slspec import HAVE_NUMBA, random_trig_potential
from slspec import _kernels
from slspec.fundamental import substeps


def run(backend, q, lams, m, repeat):
    qf = q.fine_samples(m)
    nsteps = (q.point_count - 1) * m
    hs = q.step / m
    _kernels.endpoint_batch(qf, lams[:1], nsteps, hs, backend)  # warm up / compile
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = _kernels.endpoint_batch(qf, lams, nsteps, hs, backend)
        best = min(best, time.perf_counter() - t0)
    return best, out, nsteps * lams.size


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mus", type=int, default=64)
    ap.add_argument("--mu-max", type=float, default=30.0)
    ap.add_argument("--points", type=int, default=2049)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    q = random_trig_potential(rng, point_count=args.points)
    mus = np.linspace(1.0, args.mu_max, args.mus) + 0.5j
    m = substeps(q, mus[-1])  # one substep count for the whole batch
    lams = mus * mus

    rows = []
    for backend in (["numba"] if HAVE_NUMBA else []) + ["numpy"]:
        t, out, steps = run(backend, q, lams, m, args.repeat)
        rows.append((backend, t, steps / t, out))
        print(f"{backend:6s}  time={t:8.3f}s  steps/s={steps / t:10.3e}")
    if len(rows) == 2:
        diff = np.max(np.abs(rows[0][3] - rows[1][3]) / (1.0 + np.abs(rows[1][3])))
        print(f"speedup={rows[1][1] / rows[0][1]:.1f}x  max_rel_diff={diff:.2e}")
    else:
        print("numba unavailable; numpy only")


if __name__ == "__main__":
    main()
