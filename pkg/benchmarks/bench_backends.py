"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_backends.py [--scale 1.0]

Each case runs once per backend after a warm-up call (so numba compile time
is excluded) and reports microseconds per trial or per solve. Both backends
produce identical outcomes; only speed differs.
"""

import argparse
import math
import time

from capwalk import _backend, capacity
from capwalk import geometry as g
from capwalk import stochastics as s


def _cases(scale):
    r5 = g.ManifoldSpec.euclidean(5)
    o5 = g.Point(r5, (0.0,) * 5)
    far = g.Point(r5, (1.0, 0.0, 0.0, 0.0, 0.0))
    eh = g.ManifoldSpec.eguchi_hanson(6, 1.0)
    x_eh = g.Point(eh, (5.0, math.pi / 2, 0.0, 0.0, 0.0, 0.0))
    ball = g.Ball((2.0, 0.0, 0.0, 0.0, 0.0), 1.0)
    pts = capacity.sphere_points(3, int(600 * scale) or 50)
    kernel = capacity.make_kernel("newtonian", 3)

    def n(k):
        return max(1, int(k * scale))

    return [
        ("flat ball hitting", n(2000), lambda t: s.hitting_probability_mc(r5, o5, ball, math.inf, t, seed=1)),
        ("eh radial bolt", n(2000), lambda t: s.eh_bolt_hitting(eh, x_eh, 1.0, math.inf, t, seed=2)),
        ("eh chart bolt", n(500), lambda t: s.eh_bolt_hitting(eh, x_eh, 1.0, math.inf, t, seed=2, method="chart")),
        ("two-walker sausage", n(30), lambda t: s.sausage_intersection(r5, o5, far, 0.16, math.inf, t, seed=3)),
        ("frank-wolfe solve", 1, lambda t: capacity.equilibrium_measure(pts, kernel)),
    ]


def _time(fn, count):
    start = time.perf_counter()
    fn(count)
    return time.perf_counter() - start


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0, help="multiply trial counts")
    args = parser.parse_args(argv)
    print(f"{'case':<22}{'count':>7}{'numba us':>14}{'numpy us':>14}{'speedup':>10}")
    for name, count, fn in _cases(args.scale):
        per = {}
        for backend in ("numba", "numpy"):
            with _backend.use_backend(backend):
                fn(1)
                per[backend] = _time(fn, count) / count * 1e6
        print(f"{name:<22}{count:>7}{per['numba']:>14.1f}{per['numpy']:>14.1f}{per['numpy'] / per['numba']:>10.1f}")


if __name__ == "__main__":
    main()
