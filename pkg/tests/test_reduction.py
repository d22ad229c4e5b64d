from __future__ import annotations

import math

import numpy as np
import pytest

from sbpsolver.grid import ScalarField, build_grid, random_smooth_field
from sbpsolver.reduction import FOUR_PI, certify_phi_bound, solve_phi


def test_phi_of_zero_is_exactly_zero():
    g = build_grid(3, 7, 1.0)
    res = solve_phi(ScalarField.zeros(g))
    assert not np.any(res.phi.values) and res.h_norm == 0.0


def test_quadratic_homogeneity_and_evenness():
    g = build_grid(3, 9, 1.0)
    u = random_smooth_field(g, np.random.default_rng(0))
    base = solve_phi(u).phi.values
    for t in (-2.0, 0.5, 3.0):
        assert np.allclose(solve_phi(u * t).phi.values, t * t * base, rtol=1e-10, atol=0)


def test_energy_identity_and_positivity():
    g = build_grid(3, 11, 1.0)
    rng = np.random.default_rng(1)
    for _ in range(5):
        u = random_smooth_field(g, rng)
        res = solve_phi(u)
        assert res.energy_identity_residual <= 1e-10
        lhs = res.grad_energy + res.lap_energy
        rhs = FOUR_PI * float(res.phi.values @ (u.values**2)) * g.cell_volume
        assert lhs == pytest.approx(rhs, rel=1e-10)
        assert np.all(res.phi.values > 0) and np.all(res.theta.values < 0)


def test_constant_source_in_1d_matches_closed_form():
    # -phi_xx + phi_xxxx = 4 pi with phi = phi_xx = 0 at x = 0, 1
    g = build_grid(1, 399, 1.0)
    res = solve_phi(ScalarField(g, np.ones(g.size)))
    x = g.axes()[0]
    c = math.cosh(0.5)
    theta = -FOUR_PI * (1 - np.cosh(x - 0.5) / c)
    phi = 2 * math.pi * x * (1 - x) + FOUR_PI * (np.cosh(x - 0.5) - c) / c
    assert np.allclose(res.theta.values, theta, atol=1e-4)
    assert np.allclose(res.phi.values, phi, atol=1e-4)


def test_phi_bound_constant_is_mesh_stable():
    c15 = certify_phi_bound(build_grid(3, 15, 1.0), 20, seed=3)
    c23 = certify_phi_bound(build_grid(3, 23, 1.0), 20, seed=3)
    assert c15 > 0 and abs(c15 - c23) / c15 < 0.05


def test_rejects_lifted_input():
    g = build_grid(2, 5, 1.0)
    with pytest.raises(ValueError):
        solve_phi(ScalarField.from_full(g, np.zeros(g.full_shape)))
    with pytest.raises(ValueError):
        certify_phi_bound(g, 5)
