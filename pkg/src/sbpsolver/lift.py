"""Boundary lift: the solution of the homogeneous fourth-order problem that
carries the Dirichlet data ``phi = h1`` and ``Lap phi = h2``."""

from __future__ import annotations

from dataclasses import dataclass

from .elliptic import solve_fourth_order
from .grid import BoundaryData, ScalarField, norm

__all__ = ["BoundaryLift", "compute_chi"]


@dataclass(frozen=True, eq=False)
class BoundaryLift:
    """Lift ``chi`` (boundary values h1), its Laplacian ``theta`` (boundary
    values h2) and the nodal sup-norm of ``chi`` over all nodes."""

    chi: ScalarField
    theta: ScalarField
    h1: BoundaryData
    h2: BoundaryData
    sup_norm: float

    def chi_interior(self):
        return self.chi.interior().ravel()


def compute_chi(h1: BoundaryData, h2: BoundaryData, **solver_kw) -> BoundaryLift:
    """Solve ``-Lap chi + Lap^2 chi = 0`` with ``chi = h1``, ``Lap chi = h2``."""
    if h1.domain != h2.domain:
        raise ValueError("h1 and h2 live on different grids")
    domain = h1.domain
    chi, theta = solve_fourth_order(ScalarField.zeros(domain), h1, h2, **solver_kw)
    if not chi.lifted:
        chi = ScalarField(domain, chi.full(), lifted=True)
    if not theta.lifted:
        theta = ScalarField(domain, theta.full(), lifted=True)
    chi = chi.with_values(chi.values, name="chi")
    theta = theta.with_values(theta.values, name="theta")
    return BoundaryLift(chi, theta, h1, h2, norm(chi, "Linf"))
