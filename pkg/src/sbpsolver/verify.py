"""Solver-independent certification of computed solutions.

Everything here is recomputed from raw stencils. The dual norm uses an exact
sine-transform Poisson solve instead of the factorizations of
:mod:`sbpsolver.elliptic`, and the smallest discrete eigenvalue comes from its
closed form, so a bug on the solver path cannot certify itself.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import scipy.fft

from .elliptic import apply, get_operator
from .grid import BoundaryData, GridDomain, ScalarField, laplacian_stencil
from .nonlinearity import g_values

__all__ = [
    "ResidualReport",
    "MaxPrincipleVerdict",
    "NonexistenceVerdict",
    "system_residual",
    "check_max_principle",
    "check_nonexistence",
    "dual_norm",
    "lambda1_discrete",
    "SCHRODINGER_TOL",
]

SCHRODINGER_TOL = 1e-5
MAX_PRINCIPLE_SLACK = 1e-12


@dataclass
class ResidualReport:
    """Residuals of both equations and of the boundary conditions.

    ``schrodinger_residual`` is an absolute dual norm; ``field_residual`` and
    the Laplacian part of ``bc_residual`` are relative.
    """

    schrodinger_residual: float
    field_residual: float
    bc_residual: float
    schrodinger_tol: float
    field_tol: float
    bc_tol: float
    details: dict[str, float] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        ok = (
            self.schrodinger_residual <= self.schrodinger_tol
            and self.field_residual <= self.field_tol
            and self.bc_residual <= self.bc_tol
        )
        return "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


def _poisson_solve(domain: GridDomain, b: np.ndarray) -> np.ndarray:
    """Exact solve of ``-Lap_h x = b`` on the box via the type-I sine transform."""
    lam = np.zeros(domain.shape)
    for axis, (n, h) in enumerate(zip(domain.n_per_axis, domain.spacing)):
        j = np.arange(1, n + 1)
        l1 = (4.0 / (h * h)) * np.sin(0.5 * math.pi * j / (n + 1)) ** 2
        shape = [1] * domain.dim
        shape[axis] = n
        lam = lam + l1.reshape(shape)
    bt = scipy.fft.dstn(b.reshape(domain.shape), type=1, norm="ortho")
    return scipy.fft.idstn(bt / lam, type=1, norm="ortho").ravel()


def dual_norm(domain: GridDomain, density: np.ndarray) -> float:
    """Discrete H^{-1} norm ``sqrt(<r, (-Lap_h)^{-1} r>)`` of an L2 density."""
    s = _poisson_solve(domain, density)
    return math.sqrt(max(float(density @ s) * domain.cell_volume, 0.0))


def lambda1_discrete(domain: GridDomain) -> float:
    """Closed-form smallest eigenvalue of ``-Lap_h`` on the box."""
    return float(sum((4.0 / (h * h)) * math.sin(0.5 * math.pi / (n + 1)) ** 2
                     for n, h in zip(domain.n_per_axis, domain.spacing)))


def _l2(domain: GridDomain, x: np.ndarray) -> float:
    return math.sqrt(float(np.sum(x * x)) * domain.cell_volume)


def _face_extrapolation_mismatch(theta_full: np.ndarray, h2_full: np.ndarray) -> float:
    """Max |quadratic extrapolation of interior theta - h2| over face nodes off edges."""
    dim = theta_full.ndim
    worst = 0.0
    for axis in range(dim):
        tang = [slice(1, -1)] * dim
        for side in (0, -1):
            idx = []
            for k in (1, 2, 3):
                sl = list(tang)
                sl[axis] = k if side == 0 else -1 - k
                idx.append(tuple(sl))
            sl_b = list(tang)
            sl_b[axis] = side
            ext = 3.0 * theta_full[idx[0]] - 3.0 * theta_full[idx[1]] + theta_full[idx[2]]
            if ext.size:
                worst = max(worst, float(np.max(np.abs(ext - h2_full[tuple(sl_b)]))))
    return worst


def system_residual(
    record,
    config,
    *,
    schrodinger_tol: float = SCHRODINGER_TOL,
    field_tol: float | None = None,
    bc_tol: float | None = None,
) -> ResidualReport:
    """Residuals of the full system for ``record.u`` and ``record.phi_full``.

    ``config`` needs ``grid``, ``omega``, ``spec`` and ``lift.h1``/``lift.h2``.

    * Schrödinger: dual norm of ``-1/2 Lap_h u + phi u - g(u) - omega u``.
    * Field: ``||-theta + Lap_h theta - 4 pi u^2|| / scale`` with
      ``theta = Lap_h phi`` at interior nodes and ``theta = h2`` on the boundary.
    * Boundary: nodal mismatch of ``u`` against 0 and ``phi`` against ``h1``,
      and the quadratic extrapolation of ``theta`` to face nodes against ``h2``
      relative to ``1 + max|theta|``.

    Field and boundary tolerances default to ``10 h^2``.
    """
    domain: GridDomain = config.grid
    u: ScalarField = record.u
    phi: ScalarField = record.phi_full
    if u.domain != domain or phi.domain != domain:
        raise ValueError("record fields live on a different grid than the configuration")
    h2 = config.lift.h2
    h1 = config.lift.h1
    if field_tol is None:
        field_tol = 10.0 * domain.h_max**2
    if bc_tol is None:
        bc_tol = field_tol
    inner_sl = (slice(1, -1),) * domain.dim
    u_full = u.full()
    phi_full = phi.full() if phi.lifted else _with_boundary(phi, h1)
    u_in = u_full[inner_sl].ravel()
    phi_in = phi_full[inner_sl].ravel()

    # Schrödinger equation
    neg_lap_u = apply(get_operator(domain, "neg_laplacian"), ScalarField(domain, u_full, lifted=True)).values
    dens = 0.5 * neg_lap_u + (phi_in - config.omega) * u_in - g_values(config.spec, u_in)
    schr = dual_norm(domain, dens)

    # field equation through theta = Lap phi
    theta_in = laplacian_stencil(phi_full, domain.spacing)
    theta_full = h2.full()
    theta_full[inner_sl] = theta_in
    lap_theta = laplacian_stencil(theta_full, domain.spacing).ravel()
    src = 4.0 * math.pi * u_in * u_in
    res = -theta_in.ravel() + lap_theta - src
    num = _l2(domain, res)
    scale = _l2(domain, src) + _l2(domain, theta_in.ravel()) + _l2(domain, lap_theta)
    field_res = num / scale if scale > 0 else 0.0

    # boundary conditions
    bmask = domain.boundary_mask
    bc_u = float(np.max(np.abs(u_full[bmask]))) if u.lifted else 0.0
    bc_phi = float(np.max(np.abs(phi_full[bmask] - h1.values)))
    theta_ext = _face_extrapolation_mismatch(theta_full, h2.full())
    bc_lap = theta_ext / (1.0 + float(np.max(np.abs(theta_full))))
    return ResidualReport(
        schrodinger_residual=schr,
        field_residual=field_res,
        bc_residual=max(bc_u, bc_phi, bc_lap),
        schrodinger_tol=schrodinger_tol,
        field_tol=field_tol,
        bc_tol=bc_tol,
        details={"bc_u": bc_u, "bc_phi": bc_phi, "bc_lap_phi": bc_lap, "field_abs": num},
    )


def _with_boundary(f: ScalarField, bc: BoundaryData) -> np.ndarray:
    full = f.full()
    full[f.domain.boundary_mask] = bc.values
    return full


@dataclass
class MaxPrincipleVerdict:
    """``status`` is one of ``pass``, ``fail``, ``degenerate`` or ``inapplicable``."""

    status: str
    min_value: float
    min_node: tuple[int, ...] | None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "degenerate", "inapplicable")


def check_max_principle(
    phi: ScalarField,
    h1: BoundaryData,
    h2: BoundaryData,
    u_rhs: ScalarField,
    *,
    slack: float = MAX_PRINCIPLE_SLACK,
    allow_degenerate: bool = True,
) -> MaxPrincipleVerdict:
    """Strict positivity of ``phi`` at interior nodes under nonnegative data.

    Applies when ``h1 - h2 >= 0`` and ``h1 >= 0`` nodewise (the source
    ``4 pi u^2`` is nonnegative by construction). When ``h1 - h2 >= 0`` holds
    but ``h1 >= 0`` does not, positivity is not implied and the verdict is
    ``inapplicable``. Zero data with ``u = 0`` gives ``phi = 0``, reported as
    ``degenerate`` after checking ``|phi| <= slack``.
    """
    domain = phi.domain
    if h1.domain != domain or h2.domain != domain or u_rhs.domain != domain:
        raise ValueError("fields live on different grids")
    interior = phi.interior()
    i = int(np.argmin(interior))
    node = tuple(int(k) for k in np.unravel_index(i, interior.shape))
    vmin = float(interior.ravel()[i])
    if np.any(h1.values - h2.values < 0):
        return MaxPrincipleVerdict("inapplicable", vmin, node, "hypothesis h1 - h2 >= 0 violated")
    if np.any(h1.values < 0):
        return MaxPrincipleVerdict("inapplicable", vmin, node,
                                   "h1 >= 0 fails somewhere; positivity of phi is not implied")
    if h1.is_zero() and not np.any(u_rhs.interior()):
        ok = float(np.max(np.abs(interior))) <= slack
        if allow_degenerate and ok:
            return MaxPrincipleVerdict("degenerate", vmin, node, "zero data: phi vanishes identically")
        return MaxPrincipleVerdict("fail", vmin, node, "zero data but phi does not vanish" if not ok
                                   else "zero data: strict positivity cannot hold")
    if vmin > -slack:
        return MaxPrincipleVerdict("pass", vmin, node)
    return MaxPrincipleVerdict("fail", vmin, node, f"phi = {vmin:.3e} at interior node {node}")


@dataclass
class NonexistenceVerdict:
    """``status`` is ``consistent``, ``contradiction`` or ``inapplicable``."""

    status: str
    omega: float
    lambda1: float
    rayleigh_lhs: float = 0.0
    rayleigh_rhs: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "contradiction"


def check_nonexistence(record, config, *, trivial_threshold: float = 1e-6) -> NonexistenceVerdict:
    """Consistency of a record with the nonexistence region of the unforced problem.

    For ``g = 0`` and ``h1 - h2 >= 0`` every solution has ``phi >= 0``, and
    testing the first equation with ``u`` gives
    ``omega int u^2 > 1/2 int |grad u|^2 >= lambda_1/2 int u^2``. A nontrivial
    converged record with ``omega <= lambda_1^h / 2`` or violating the
    inequality is a contradiction. The record's own ``converged`` flag is
    trusted, which lets a fabricated record be checked.
    """
    domain = config.grid
    lam1 = lambda1_discrete(domain)
    omega = float(config.omega)
    if getattr(config.spec, "family", None) != "zero":
        return NonexistenceVerdict("inapplicable", omega, lam1, message="nonlinearity is not the zero family")
    if np.any(config.lift.h1.values - config.lift.h2.values < 0):
        return NonexistenceVerdict("inapplicable", omega, lam1, message="hypothesis h1 - h2 >= 0 violated")
    u = record.u
    u_full = u.full()
    u_in = u_full[(slice(1, -1),) * domain.dim].ravel()
    l2sq = float(u_in @ u_in) * domain.cell_volume
    nontrivial = math.sqrt(l2sq) > trivial_threshold and bool(getattr(record, "converged", True))
    if not nontrivial:
        return NonexistenceVerdict("consistent", omega, lam1, message="trivial or non-converged record")
    grad_sq = -float(laplacian_stencil(u_full, domain.spacing).ravel() @ u_in) * domain.cell_volume
    lhs, rhs = omega * l2sq, 0.5 * grad_sq
    if omega <= 0.5 * lam1:
        return NonexistenceVerdict("contradiction", omega, lam1, lhs, rhs,
                                   f"nontrivial record with omega = {omega:.6g} <= lambda1/2 = {0.5 * lam1:.6g}")
    if not lhs > rhs:
        return NonexistenceVerdict("contradiction", omega, lam1, lhs, rhs,
                                   "Rayleigh inequality omega int u^2 > 1/2 int |grad u|^2 fails")
    return NonexistenceVerdict("consistent", omega, lam1, lhs, rhs)
