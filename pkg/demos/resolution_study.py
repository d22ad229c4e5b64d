"""How the ground-state energy depends on the mesh in one, two and three
dimensions.

In one and two dimensions the default quintic nonlinearity is subcritical
and the energy converges at second order. In three dimensions the ground
state concentrates into a spike whose peak grows as the mesh is refined, so
coarse-mesh energies are not yet in the asymptotic regime.
"""

from __future__ import annotations

import sys

import numpy as np

from sbpsolver.elliptic import eigenpairs
from sbpsolver.energy import ProblemConfig
from sbpsolver.grid import build_grid
from sbpsolver.minimax import mountain_pass
from sbpsolver.nonlinearity import power


def ground_state(dim: int, n: int):
    grid = build_grid(dim, n, 1.0)
    problem = ProblemConfig.homogeneous(grid, 0.0, power(5))
    return mountain_pass(problem, eigenpairs(grid, 1).vectors[0])


def study(dim: int, sizes) -> None:
    js = []
    for n in sizes:
        rec = ground_state(dim, n)
        js.append(rec.J_value)
        print(f"  dim {dim}  n = {n:>3}  J = {rec.J_value:.5f}  max u = {np.max(np.abs(rec.u.values)):.3f}")
    if len(js) >= 3:
        r = (js[1] - js[0]) / (js[2] - js[1])
        print(f"  increment ratio {r:.2f} (4 for second order)")


if __name__ == "__main__":
    full = "--full" in sys.argv[1:]
    study(1, (63, 127, 255))
    study(2, (15, 31, 63))
    study(3, (7, 15, 31) if full else (7, 11, 15))
