"""Trace inequality on seeded smooth traces: D_s times the extension energy against the seminorm.

Prints, per trace, the relative gap for the Poisson extension (which should
nearly saturate the inequality) and for the periodic spectral extension.
"""
import argparse

import numpy as np

from fracphase.extension import graded_y_grid, poisson_extend, spectral_extend, trace_inequality_gap
from fracphase.nonlocal_energy import TraceFn
from fracphase.special import D_s_constant


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--s", type=float, default=0.75)
    parser.add_argument("--count", type=int, default=10)
    parser.add_argument("--nx", type=int, default=1024)
    parser.add_argument("--ny", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    s, a = args.s, 1 - 2 * args.s
    D = D_s_constant(s).D_s
    rng = np.random.default_rng(args.seed)
    x = np.linspace(-0.5, 0.5, args.nx)
    y = graded_y_grid(1.0, args.ny, a)
    print(f"D_s = {D:.10f}")
    print(f"{'trace':>5} {'poisson gap':>12} {'spectral gap':>13}")
    for k in range(args.count):
        c, w = rng.uniform(-0.25, 0.25), rng.uniform(0.04, 0.07)
        v = TraceFn(x, np.exp(-(((x - c) / w) ** 2)))
        ext = poisson_extend(v, y, s)
        per = TraceFn(x[:-1], v.values[:-1])
        sx = spectral_extend(per, y, s)
        gp = trace_inequality_gap(v, ext.field, s, D, ext.energy) / (D * ext.energy)
        gs = trace_inequality_gap(per, sx.field, s, D, sx.energy) / (D * sx.energy)
        print(f"{k:5d} {gp:+12.4%} {gs:+13.4%}")


if __name__ == "__main__":
    main()
