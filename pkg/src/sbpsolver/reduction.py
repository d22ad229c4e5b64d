"""The reduction map ``u -> Phi(u)``: the potential solving the fourth-order
equation with source ``4 pi u^2`` and homogeneous data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import get_operator, solve_fourth_order
from .grid import GridDomain, ScalarField, norm, random_smooth_field

__all__ = ["PhiResult", "solve_phi", "certify_phi_bound", "FOUR_PI"]

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True, eq=False)
class PhiResult:
    phi: ScalarField
    theta: ScalarField
    h_norm: float
    energy_identity_residual: float

    @property
    def grad_energy(self) -> float:
        """``int |grad phi|^2`` as the discrete form ``<-Lap_h phi, phi>``."""
        return _grad_form(self.phi)

    @property
    def lap_energy(self) -> float:
        """``int |Lap phi|^2``."""
        return self.h_norm**2


def _grad_form(f: ScalarField) -> float:
    a = get_operator(f.domain, "neg_laplacian").matrix
    v = f.values
    return float(v @ (a @ v)) * f.domain.cell_volume


def solve_phi(u: ScalarField, **solver_kw) -> PhiResult:
    """``Phi(u)`` together with ``theta = Lap_h Phi(u)``.

    The returned ``energy_identity_residual`` is the relative defect in
    ``int |grad phi|^2 + int |Lap phi|^2 = 4 pi int phi u^2``.
    """
    if u.lifted:
        raise ValueError("Phi is defined for homogeneous-trace fields")
    domain = u.domain
    uu = u.values * u.values
    phi, theta = solve_fourth_order(ScalarField(domain, FOUR_PI * uu), **solver_kw)
    phi = phi.with_values(phi.values, name="Phi")
    theta = theta.with_values(theta.values, name="theta")
    w = domain.cell_volume
    lap_sq = float(theta.values @ theta.values) * w
    grad_sq = _grad_form(phi)
    source = FOUR_PI * float(phi.values @ uu) * w
    scale = max(abs(source), grad_sq + lap_sq)
    resid = abs(grad_sq + lap_sq - source) / scale if scale > 0 else 0.0
    return PhiResult(phi, theta, math.sqrt(lap_sq), resid)


def certify_phi_bound(
    domain: GridDomain,
    sample_count: int = 100,
    seed: int = 42,
    **solver_kw,
) -> float:
    """Empirical constant in ``||Phi(u)||_H <= C ||u||^2`` (H01 norm on the right).

    Samples are seeded random low-frequency fields (see
    :func:`~sbpsolver.grid.random_smooth_field`); the zero field is skipped.
    """
    if sample_count < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(sample_count):
        u = random_smooth_field(domain, rng)
        nu = norm(u, "H01")
        if nu == 0.0:
            continue
        best = max(best, solve_phi(u, **solver_kw).h_norm / nu**2)
    return best
