from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest

from sbpsolver.elliptic import eigenpairs
from sbpsolver.energy import ProblemConfig, grad_J
from sbpsolver.grid import BoundaryData, ScalarField, build_grid, random_smooth_field
from sbpsolver.lift import compute_chi
from sbpsolver.minimax import SolutionRecord, mountain_pass
from sbpsolver.nonlinearity import power, zero
from sbpsolver.reduction import solve_phi
from sbpsolver.verify import (
    check_max_principle,
    check_nonexistence,
    dual_norm,
    lambda1_discrete,
    system_residual,
)

PI = math.pi


def _record(u, phi_full, omega=0.0, converged=True):
    return SolutionRecord(u=u, phi_full=phi_full, omega=omega, J_value=0.0, dual_norm=0.0,
                          iterations=0, path_energy=0.0, converged=converged)


@pytest.fixture(scope="module")
def solved():
    g = build_grid(3, 7, 1.0)
    cfg = ProblemConfig.homogeneous(g, 0.0, power(5))
    rec = mountain_pass(cfg, eigenpairs(g, 1).vectors[0])
    return cfg, rec


def test_lambda1_closed_form_matches_eigensolver():
    g = build_grid(3, (7, 9, 5), (1.0, 1.3, 0.8))
    assert lambda1_discrete(g) == pytest.approx(eigenpairs(g, 1).lambdas[0], rel=1e-9)


def test_dual_norm_matches_energy_gradient(solved):
    cfg, _ = solved
    u = random_smooth_field(cfg.grid, np.random.default_rng(0))
    gp = grad_J(u, cfg)
    assert dual_norm(cfg.grid, gp.dual.values) == pytest.approx(gp.dual_norm, rel=1e-8)


def test_trivial_record_has_zero_residuals(solved):
    cfg, _ = solved
    z = ScalarField.zeros(cfg.grid)
    rep = system_residual(_record(z, cfg.lift.chi), cfg)
    assert rep.schrodinger_residual == 0.0 and rep.field_residual == 0.0 and rep.bc_residual == 0.0
    assert rep.passed


def test_converged_record_passes_and_noise_fails(solved):
    cfg, rec = solved
    rep = system_residual(rec, cfg)
    assert rep.passed, rep.to_dict()
    assert rep.schrodinger_residual <= 1e-5
    rng = np.random.default_rng(1)
    noisy = rec.u.with_values(rec.u.values * (1 + 1e-2 * rng.standard_normal(rec.u.values.size)))
    bad = system_residual(_record(noisy, rec.phi_full), cfg)
    assert bad.verdict == "fail"
    assert bad.schrodinger_residual > 1e-5


def test_field_residual_is_second_order_on_analytic_pair():
    # phi = prod sin(pi x_i) satisfies -Lap phi + Lap^2 phi = (3 pi^2 + 9 pi^4) phi
    errs = []
    for n in (7, 15, 31):
        g = build_grid(3, n, 1.0)
        s = ScalarField.from_function(g, lambda x, y, z: np.sin(PI * x) * np.sin(PI * y) * np.sin(PI * z))
        u = s.with_values(np.sqrt((3 * PI**2 + 9 * PI**4) * s.values / (4 * PI)))
        cfg = SimpleNamespace(grid=g, omega=0.0, spec=zero(),
                              lift=SimpleNamespace(h1=BoundaryData.zeros(g), h2=BoundaryData.zeros(g)))
        errs.append(system_residual(_record(u, s), cfg).field_residual)
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(r > 1.8 for r in rates), (errs, rates)


def test_boundary_mismatch_is_detected(solved):
    cfg, rec = solved
    full = rec.phi_full.full()
    full[0, 3, 3] += 0.5
    rep = system_residual(_record(rec.u, ScalarField.from_full(cfg.grid, full)), cfg)
    assert rep.details["bc_phi"] == pytest.approx(0.5)
    assert not rep.passed


def test_grid_mismatch_raises(solved):
    cfg, rec = solved
    other = build_grid(3, 5, 1.0)
    with pytest.raises(ValueError):
        system_residual(_record(ScalarField.zeros(other), rec.phi_full), cfg)


def test_max_principle_statuses():
    g = build_grid(3, 7, 1.0)
    u = random_smooth_field(g, np.random.default_rng(2))
    z = ScalarField.zeros(g)
    h1, h2 = BoundaryData.constant(g, 0.5), BoundaryData.constant(g, -0.2)
    lift = compute_chi(h1, h2)
    full = ScalarField.from_full(g, lift.chi.values + solve_phi(u).phi.full().ravel())
    assert check_max_principle(full, h1, h2, u).status == "pass"
    zb = BoundaryData.zeros(g)
    assert check_max_principle(z, zb, zb, z).status == "degenerate"
    assert check_max_principle(z, zb, zb, z, allow_degenerate=False).status == "fail"
    assert check_max_principle(full, h2, h1, u).status == "inapplicable"
    neg = BoundaryData.constant(g, -0.1)
    assert check_max_principle(full, neg, BoundaryData.constant(g, -0.3), u).status == "inapplicable"
    bent = full.full()
    bent[3, 3, 3] = -1.0
    v = check_max_principle(ScalarField.from_full(g, bent), h1, h2, u)
    assert v.status == "fail" and v.min_node == (2, 2, 2)


def test_nonexistence_statuses():
    g = build_grid(3, 7, 1.0)
    lam1 = lambda1_discrete(g)
    u = random_smooth_field(g, np.random.default_rng(3))
    z = ScalarField.zeros(g)
    cfg = ProblemConfig.homogeneous(g, 0.3 * lam1, zero())
    assert check_nonexistence(_record(z, z), cfg).status == "consistent"
    assert check_nonexistence(_record(u, z, converged=False), cfg).status == "consistent"
    fake = check_nonexistence(_record(u, z), cfg)
    assert fake.status == "contradiction" and not fake.ok
    assert check_nonexistence(_record(u, z), cfg.with_omega(100 * lam1)).status == "consistent"
    assert check_nonexistence(_record(u, z), ProblemConfig.homogeneous(g, 0.0, power(5))).status == "inapplicable"
