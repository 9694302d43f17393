"""Tabulate the trace constant and the optimal-profile constant across the weight exponent.

For each ``a`` prints ``s``, ``D_s``, the truncated values ``kappa_s^T`` and
the extrapolated ``kappa_s`` for the quartic potential, together with the
dilation ratio ``potential / ((2s-1) nonlocal)`` of the longest profile.
"""
import argparse

from fracphase.nonlocal_energy import kappa_lower_bound
from fracphase.params import make_params, quartic_well
from fracphase.profile import kappa_s_report
from fracphase.special import D_s_constant


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--a", type=float, nargs="+", default=[-0.2, -0.35, -0.5, -0.65, -0.8])
    parser.add_argument("--grid", type=int, default=16, help="nodes per unit length")
    args = parser.parse_args()
    V = quartic_well()
    print(f"{'a':>6} {'s':>6} {'D_s':>9} {'kappa^T (T=8..64)':>42} {'kappa_s':>9} {'bound':>7} {'dilation':>9}")
    for a in args.a:
        p = make_params(a)
        D = D_s_constant(p.s).D_s
        rep = kappa_s_report(p, V, D, nodes_per_unit=args.grid)
        last = rep.solutions[-1]
        dil = last.potential_part / ((2 * p.s - 1) * last.nonlocal_part)
        vals = " ".join(f"{v:.5f}" for v in rep.values_T)
        flag = "" if rep.converged else "  (iteration cap hit)"
        print(f"{a:6.2f} {p.s:6.3f} {D:9.5f} {vals:>42} {rep.value:9.5f} "
              f"{kappa_lower_bound(p.s, V, 0.1, D_s=D):7.4f} {dil:9.4f}{flag}")


if __name__ == "__main__":
    main()
