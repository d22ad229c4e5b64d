"""Second-order convergence of the fourth-order field solver.

``phi = sin(pi x) sin(pi y) sin(pi z)`` vanishes on the boundary together
with its Laplacian and satisfies ``-Lap phi + Lap^2 phi = (3 pi^2 + 9 pi^4) phi``.
Solving with that right-hand side and halving ``h`` should cut the nodal
error by about four.
"""

from __future__ import annotations

import math

import numpy as np

from sbpsolver.elliptic import solve_fourth_order
from sbpsolver.grid import ScalarField, build_grid

PI2 = math.pi**2


def error(n: int) -> float:
    g = build_grid(3, n, 1.0)
    s = ScalarField.from_function(g, lambda x, y, z: np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z))
    phi, _ = solve_fourth_order(s * (3 * PI2 + 9 * PI2**2))
    return float(np.max(np.abs(phi.values - s.values)))


if __name__ == "__main__":
    prev = None
    for n in (7, 15, 31):
        e = error(n)
        ratio = "" if prev is None else f"   ratio {prev / e:.2f}"
        print(f"n = {n:>2}  h = 1/{n + 1:<2}  max error {e:.3e}{ratio}")
        prev = e
