"""Two qualitative facts checked numerically.

Without the nonlinearity and below half the first Dirichlet eigenvalue the
search only ever finds the trivial solution. With nonnegative boundary data
``h1 >= 0`` and ``h1 - h2 >= 0`` the potential is strictly positive inside.
"""

from __future__ import annotations

import numpy as np

from sbpsolver.energy import ProblemConfig
from sbpsolver.grid import BoundaryData, ScalarField, build_grid, random_smooth_field
from sbpsolver.lift import compute_chi
from sbpsolver.minimax import deflated_solve
from sbpsolver.nonlinearity import zero
from sbpsolver.reduction import solve_phi
from sbpsolver.verify import check_max_principle, lambda1_discrete

if __name__ == "__main__":
    grid = build_grid(3, 9, 1.0)
    lam1 = lambda1_discrete(grid)
    print(f"lambda_1^h = {lam1:.4f}")
    for c in (0.1, 0.3, 0.45):
        problem = ProblemConfig.homogeneous(grid, c * lam1, zero())
        res = deflated_solve(problem, 1, max_attempts=3)
        print(f"omega = {c:.2f} lambda_1: {len(res)} nontrivial, "
              f"{sum(r.trivial for r in res.rejected)} of {res.attempts} attempts collapsed to zero")

    rng = np.random.default_rng(0)
    worst = np.inf
    for _ in range(10):
        a, b = rng.uniform(0.0, 1.0, 2)
        h1, h2 = BoundaryData.constant(grid, a), BoundaryData.constant(grid, a - b)
        u = random_smooth_field(grid, rng)
        lift = compute_chi(h1, h2)
        phi = ScalarField.from_full(grid, lift.chi.values + solve_phi(u).phi.full().ravel())
        verdict = check_max_principle(phi, h1, h2, u)
        worst = min(worst, verdict.min_value)
        assert verdict.status == "pass"
    print(f"max principle: 10/10 pass, smallest interior phi {worst:.3e}")
