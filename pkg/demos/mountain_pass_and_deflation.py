"""Ground state and further critical points of the default problem.

Checks the sampled mountain-pass geometry, runs the path-deformation search
from the first eigenvector, then asks deflation for two more distinct orbits.
Every record is verified against the full system with residuals computed
independently of the solver.
"""

from __future__ import annotations

from sbpsolver.elliptic import eigenpairs
from sbpsolver.energy import ProblemConfig, h01_norm
from sbpsolver.grid import build_grid
from sbpsolver.minimax import deflated_solve, orbit_distance, verify_geometry
from sbpsolver.nonlinearity import power
from sbpsolver.verify import system_residual

if __name__ == "__main__":
    grid = build_grid(3, 11, 1.0)
    problem = ProblemConfig.homogeneous(grid, 0.0, power(5))
    basis = eigenpairs(grid, 4)

    geo = verify_geometry(problem, basis, sphere_samples=32)
    print(f"geometry: k_omega = {geo.k_omega}, rho = {geo.rho:.3f}, alpha = {geo.alpha:.3f}, "
          f"R = {geo.R}, ok = {geo.ok}")

    result = deflated_solve(problem, 3, basis=basis)
    for rec in result:
        rep = system_residual(rec, problem)
        print(f"#{rec.deflation_index}  J = {rec.J_value:.6f}  |u|_L2 = {rec.u_l2:.4f}  "
              f"dual norm = {rec.dual_norm:.1e}  residuals: {rep.schrodinger_residual:.1e} / "
              f"{rep.field_residual:.1e} / {rep.bc_residual:.1e}  -> {rep.verdict}")
    if result.shortfall:
        print(result.shortfall)

    # the mountain-pass level sits above the sampled sphere bound alpha
    first = result[0]
    print(f"J(ground) / alpha = {first.J_value / geo.alpha:.2f}")
    for rec in result.records[1:]:
        d = orbit_distance(rec.u, first.u) / h01_norm(first.u)
        print(f"relative orbit distance of #{rec.deflation_index} from #0: {d:.3f}")
