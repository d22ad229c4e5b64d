from __future__ import annotations

import numpy as np

from sbpsolver.elliptic import apply, get_operator
from sbpsolver.grid import BoundaryData, ScalarField, build_grid
from sbpsolver.lift import compute_chi


def test_zero_data_gives_zero_lift():
    g = build_grid(3, 5, 1.0)
    z = BoundaryData.zeros(g)
    lift = compute_chi(z, z)
    assert not np.any(lift.chi.values) and lift.sup_norm == 0.0


def test_lift_solves_homogeneous_fourth_order_problem():
    g = build_grid(2, 15, 1.0)
    h1 = BoundaryData.per_face(g, {"x0": 1.0, "y1": 0.5})
    h2 = BoundaryData.constant(g, -0.3)
    lift = compute_chi(h1, h2)
    assert np.array_equal(lift.chi.boundary_values(), h1.values)
    assert np.array_equal(lift.theta.boundary_values(), h2.values)
    # -Lap chi = -theta and (-Lap + I) theta = 0 in the interior
    lap = get_operator(g, "neg_laplacian")
    helm = get_operator(g, "helmholtz")
    assert np.allclose(apply(lap, lift.chi).values, -lift.theta.interior().ravel(), atol=1e-8)
    assert np.allclose(apply(helm, lift.theta).values, 0.0, atol=1e-8)
    assert lift.sup_norm == np.max(np.abs(lift.chi.values))


def test_constant_data_with_zero_laplacian_gives_constant_lift():
    g = build_grid(3, 5, 1.0)
    lift = compute_chi(BoundaryData.constant(g, 0.7), BoundaryData.zeros(g))
    assert np.allclose(lift.chi.values, 0.7)
    assert np.allclose(lift.chi_interior(), 0.7)
    assert isinstance(lift.chi, ScalarField) and lift.chi.lifted
