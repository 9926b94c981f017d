"""Probe the potential-energy functionals on the quotient 2-sphere.

Three small experiments:
  1. path independence of L across reparametrized and detoured paths,
  2. the inequality chain 0 <= I <= 2(I-J) <= I over random potentials,
  3. a scan of the scalar-trace constant showing the round structure is a
     critical point of the curvature energy only at c = 1/2.
"""
import argparse

import numpy as np

from sasakigeo import (
    BasicPotential,
    S2Grid,
    functional_I,
    functional_J,
    functional_L,
    harmonic_potential,
    linear_path,
    power_path,
    random_potential,
)
from sasakigeo.functionals import piecewise_linear_path, stationarity_residual


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=40)
    ap.add_argument("--lmax", type=int, default=24)
    args = ap.parse_args()

    grid = S2Grid(64, 128, lmax=args.lmax)
    rng = np.random.default_rng(args.seed)
    zero = BasicPotential.zero(grid)

    # 1. path independence
    # amplitudes sized so the deformed density 1 - box0(phi)/2 stays positive
    phi = harmonic_potential(grid, 3, 1, 0.012).plus(harmonic_potential(grid, 5, 2, 0.004))
    straight = functional_L(linear_path(zero, phi, 65))
    curved = functional_L(power_path(zero, phi, 3.0, 129))
    midpoint = random_potential(grid, rng, lmax=6, max_amplitude=0.02)
    detour = functional_L(piecewise_linear_path([zero, midpoint, phi], 65))
    print("L along three paths with the same endpoints:")
    print(f"  straight   {straight:+.12f}")
    print(f"  power-3    {curved:+.12f}   (|diff| {abs(curved-straight):.2e})")
    print(f"  detour     {detour:+.12f}   (|diff| {abs(detour-straight):.2e})")

    # 2. inequality chain over random draws
    worst_lower, worst_upper, worst_I = np.inf, np.inf, np.inf
    for _ in range(args.samples):
        psi = random_potential(grid, rng)
        I = functional_I(zero, psi)
        J = functional_J(zero, psi, linear_path(zero, psi, 33))
        worst_I = min(worst_I, I)
        worst_lower = min(worst_lower, 2.0 * (I - J) - I)
        worst_upper = min(worst_upper, I - 2.0 * (I - J))
    print(f"\ninequality chain over {args.samples} random potentials "
          f"(all three should be >= 0):")
    print(f"  min I                 {worst_I:+.3e}")
    print(f"  min 2(I-J) - I        {worst_lower:+.3e}")
    print(f"  min I - 2(I-J)        {worst_upper:+.3e}")

    # 3. stationarity scan for the scalar-trace constant
    probe = harmonic_potential(grid, 2, 1, 0.02).shifted(0.01)
    print("\n|dM(0)| at the round structure vs scalar-trace constant c:")
    for c in (0.25, 0.5, 0.75, 1.0):
        res = stationarity_residual(grid, probe, c)
        marker = "  <-- critical" if res < 1e-6 else ""
        print(f"  c = {c:4.2f}   {res:.3e}{marker}")


if __name__ == "__main__":
    main()
