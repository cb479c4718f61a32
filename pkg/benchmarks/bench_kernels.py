"""Time the compiled membrane kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--sites N] [--repeat R]

The default site count matches the membrane pairs of the default discrete strand.
"""

import argparse
import timeit

import numpy as np

from gapstrand import _brkernel_py as fallback
from gapstrand import cell_model as cm
from gapstrand.geometry import SubunitGeometry, build_mesh

try:
    from gapstrand import _brkernel as compiled
except ImportError:
    compiled = None


def _state(n, rng):
    rest = cm.resting_state()
    v = rest.v[0] + rng.uniform(-5.0, 90.0, n)
    y = np.repeat(rest.gates[:, :1], n, axis=1)
    return v, y


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=None)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    n = args.sites or build_mesh(SubunitGeometry()).n_pairs
    v, y = _state(n, np.random.default_rng(0))
    p = cm.DEFAULT_PARAMS.vector
    rates = cm.DEFAULT_PARAMS.rate_table

    backends = [("python", fallback)] + ([("compiled", compiled)] if compiled else [])
    times = {}
    for name, mod in backends:
        work = y.copy()
        times[name] = (
            _best(lambda: mod.ionic_current(v, y, p), args.repeat),
            _best(lambda: mod.step_gates(v, work, 0.01, rates, p), args.repeat),
        )

    print(f"{n} membrane sites, best of {args.repeat}")
    print(f"{'backend':<10}{'ionic (ms)':>12}{'gates (ms)':>12}")
    for name, (ion, gates) in times.items():
        print(f"{name:<10}{1e3 * ion:>12.3f}{1e3 * gates:>12.3f}")
    if compiled is None:
        print("compiled kernel not built; only the fallback was timed")
    else:
        py, cy = times["python"], times["compiled"]
        print(f"speed-up   {py[0] / cy[0]:>11.1f}x{py[1] / cy[1]:>11.1f}x")


if __name__ == "__main__":
    main()
