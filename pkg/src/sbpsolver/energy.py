"""The two-variable functional ``F``, the reduced functional ``J`` and its
Sobolev gradient.

All integrals use the nodal quadrature of :mod:`sbpsolver.grid`, and the
gradient term ``int |grad u|^2`` is the discrete form ``<-Lap_h u, u>``.
With these choices ``J(u) = F(u, Phi(u))`` and ``J'(u) = dF/du(u, Phi(u))``
hold exactly at the discrete level, up to linear-solver round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import get_operator
from .grid import GridDomain, ScalarField
from .lift import BoundaryLift, compute_chi
from .grid import BoundaryData
from .nonlinearity import G_values, NonlinearitySpec, g_values
from .reduction import PhiResult, solve_phi

__all__ = [
    "ProblemConfig",
    "GradientPair",
    "ReducedFunctional",
    "eval_F",
    "eval_J",
    "grad_J",
    "partials_F",
    "h01_inner",
    "h01_norm",
]

INV_16PI = 1.0 / (16.0 * math.pi)


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """Frequency, lift, nonlinearity and linear-solver settings on one grid."""

    grid: GridDomain
    omega: float
    lift: BoundaryLift
    spec: NonlinearitySpec
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")
        if self.lift.chi.domain != self.grid:
            raise ValueError("lift lives on a different grid")
        amp = self.spec.amplitude
        if np.ndim(amp) != 0 and np.size(amp) != self.grid.size:
            raise ValueError("nodal amplitude does not match the grid")

    @classmethod
    def homogeneous(cls, grid: GridDomain, omega: float, spec: NonlinearitySpec, **solver) -> ProblemConfig:
        """Configuration with ``h1 = h2 = 0`` (so ``chi = 0``)."""
        z = BoundaryData.zeros(grid)
        return cls(grid, float(omega), compute_chi(z, z, **solver), spec, dict(solver))

    def with_omega(self, omega: float) -> ProblemConfig:
        return ProblemConfig(self.grid, float(omega), self.lift, self.spec, self.solver)

    @property
    def chi(self) -> np.ndarray:
        return self.lift.chi.interior().ravel()


@dataclass(frozen=True, eq=False)
class GradientPair:
    """``dual``: L2 density of ``J'(u)``; ``sobolev``: its H01 Riesz representative."""

    dual: ScalarField
    sobolev: ScalarField
    dual_norm: float


def _check(u: ScalarField, config: ProblemConfig) -> None:
    if u.domain != config.grid:
        raise ValueError("field and configuration live on different grids")
    if u.lifted:
        raise ValueError("expected a homogeneous-trace field")


def _a(domain: GridDomain):
    return get_operator(domain, "neg_laplacian").matrix


def h01_inner(a: ScalarField, b: ScalarField) -> float:
    """Discrete H01 inner product ``<-Lap_h a, b>``."""
    return float(a.values @ (_a(a.domain) @ b.values)) * a.domain.cell_volume


def h01_norm(a: ScalarField) -> float:
    return math.sqrt(max(h01_inner(a, a), 0.0))


def eval_F(u: ScalarField, phi: ScalarField, config: ProblemConfig) -> float:
    """``F(u, phi)`` for homogeneous-trace ``u`` and ``phi``."""
    _check(u, config)
    _check(phi, config)
    w = config.grid.cell_volume
    a = _a(config.grid)
    uv, pv = u.values, phi.values
    ap = a @ pv
    quad_u = 0.25 * float(uv @ (a @ uv)) * w
    pot = 0.5 * float(((pv + config.chi - config.omega) * uv) @ uv) * w
    nl = float(np.sum(G_values(config.spec, uv))) * w
    field_energy = INV_16PI * (float(pv @ ap) + float(ap @ ap)) * w
    return quad_u + pot - nl - field_energy


def _J_from(u: ScalarField, res: PhiResult, config: ProblemConfig) -> float:
    w = config.grid.cell_volume
    a = _a(config.grid)
    uv = u.values
    quad_u = 0.25 * float(uv @ (a @ uv)) * w
    pot = 0.5 * float(((config.chi - config.omega) * uv) @ uv) * w
    nl = float(np.sum(G_values(config.spec, uv))) * w
    field_energy = INV_16PI * (res.grad_energy + res.lap_energy)
    return quad_u + pot - nl + field_energy


def eval_J(u: ScalarField, config: ProblemConfig, phi: PhiResult | None = None) -> float:
    """Reduced functional; pass ``phi`` to reuse a computed ``Phi(u)``."""
    _check(u, config)
    if phi is None:
        phi = solve_phi(u, **config.solver)
    return _J_from(u, phi, config)


def _dual(u: ScalarField, res: PhiResult, config: ProblemConfig) -> np.ndarray:
    uv = u.values
    a = _a(config.grid)
    return 0.5 * (a @ uv) + (res.phi.values + config.chi - config.omega) * uv - g_values(config.spec, uv)


def _pair(dual: np.ndarray, config: ProblemConfig) -> GradientPair:
    lap = get_operator(config.grid, "neg_laplacian")
    s = lap.solve_matrix(dual, **_lin(config))
    dn = math.sqrt(max(float(dual @ s) * config.grid.cell_volume, 0.0))
    return GradientPair(ScalarField(config.grid, dual, name="dual"), ScalarField(config.grid, s, name="sobolev"), dn)


def _lin(config: ProblemConfig) -> dict:
    return {k: v for k, v in config.solver.items() if k in ("method", "rtol", "atol")}


def grad_J(u: ScalarField, config: ProblemConfig, phi: PhiResult | None = None) -> GradientPair:
    """Dual density ``-1/2 Lap_h u + (Phi(u) + chi - omega) u - g(u)`` and its
    Sobolev gradient ``(-Lap_h)^{-1} dual``."""
    _check(u, config)
    if phi is None:
        phi = solve_phi(u, **config.solver)
    return _pair(_dual(u, phi, config), config)


def partials_F(u: ScalarField, phi: ScalarField, config: ProblemConfig) -> tuple[GradientPair, ScalarField]:
    """Partial derivatives of ``F`` at ``(u, phi)``.

    Returns the ``u``-partial as a :class:`GradientPair` and the L2 density of
    the ``phi``-partial, ``u^2/2 - (Lap_h^2 phi - Lap_h phi)/(8 pi)``.
    """
    _check(u, config)
    _check(phi, config)
    a = _a(config.grid)
    uv, pv = u.values, phi.values
    du = 0.5 * (a @ uv) + (pv + config.chi - config.omega) * uv - g_values(config.spec, uv)
    ap = a @ pv
    dphi = 0.5 * uv * uv - (ap + a @ ap) / (8.0 * math.pi)
    return _pair(du, config), ScalarField(config.grid, dphi, name="dF_dphi")


class ReducedFunctional:
    """``J`` and its gradient with a one-entry memo of ``Phi(u)``.

    The memo is keyed by the identity of the last evaluated ``ScalarField``
    (a reference is held, so the identity cannot be recycled), which lets a
    line search evaluate ``J`` and then the gradient at the accepted point
    with a single ``Phi`` solve.
    """

    def __init__(self, config: ProblemConfig):
        self.config = config
        self._memo_u: ScalarField | None = None
        self._memo_phi: PhiResult | None = None
        self.phi_solves = 0

    def phi(self, u: ScalarField) -> PhiResult:
        if u is not self._memo_u:
            _check(u, self.config)
            self._memo_phi = solve_phi(u, **self.config.solver)
            self._memo_u = u
            self.phi_solves += 1
        return self._memo_phi

    def value(self, u: ScalarField) -> float:
        return _J_from(u, self.phi(u), self.config)

    def gradient(self, u: ScalarField) -> GradientPair:
        return _pair(_dual(u, self.phi(u), self.config), self.config)

    def value_and_gradient(self, u: ScalarField) -> tuple[float, GradientPair]:
        return self.value(u), self.gradient(u)
