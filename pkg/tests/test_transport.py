import math

import numpy as np
import pytest
import sympy as sp

from oracles import lex_partials
from properties import five_point
from varjet.exprjet import VectorField
from varjet.lve import assemble_lve
from varjet.transport import (
    IntegrationError,
    PivotVanishing,
    integrate_base,
    integrate_variational,
    path_quadrature,
)

# x' = x^2, y' = x y has the flow (x0, y0) / (1 - x0 t)
FIELD = VectorField.from_strings(["x^2", "x*y"], ["x", "y"])
Z0 = np.array([0.5, 0.3])


def _flow_partials(t, k):
    x0, y0 = sp.symbols("x0 y0")
    flow = [x0 / (1 - x0 * t), y0 / (1 - x0 * t)]
    return np.array([lex_partials(c, (x0, y0), Z0, k) for c in flow])


def test_base_solution_matches_closed_form():
    traj = integrate_base(FIELD, Z0, (0.0, 1.0))
    for t in np.linspace(0, 1, 7):
        exact = Z0 / (1 - Z0[0] * t)
        np.testing.assert_allclose(traj.phi(t), exact, rtol=1e-11)
    assert traj.dim == 2 and traj.pivot == 0
    np.testing.assert_array_equal(traj.phi(0.0), Z0)
    np.testing.assert_allclose(traj.sample_times(3), [0, 0.5, 1])
    np.testing.assert_allclose(traj.velocity(0.0), [0.25, 0.15])


@pytest.mark.parametrize("t", [0.25, 0.6, 1.0])
def test_variational_flow_matches_flow_derivatives(t):
    traj = integrate_base(FIELD, Z0, (0.0, 1.0))
    flow = integrate_variational(traj, 4)
    for k in range(1, 5):
        want = _flow_partials(t, k)
        np.testing.assert_allclose(flow.y(k, t), want, rtol=1e-7, atol=1e-9 * np.max(np.abs(want)))


def test_variational_flow_initial_values_and_extension():
    traj = integrate_base(FIELD, Z0, (0.0, 1.0))
    low = integrate_variational(traj, 2)
    np.testing.assert_array_equal(low.y(1, 0.0), np.eye(2))
    np.testing.assert_array_equal(low.y(2, 0.0), np.zeros((2, 3)))
    high = integrate_variational(traj, 3, previous=low)
    assert high.stages[:2] == low.stages
    np.testing.assert_allclose(high.y1_inv(0.5) @ high.y(1, 0.5), np.eye(2), atol=1e-13)
    with pytest.raises(ValueError):
        integrate_variational(traj, 0)


def test_upsilon_is_a_fundamental_matrix_of_the_lve():
    fld = VectorField.from_strings(["x*(1 - y)", "-y + x^2"], ["x", "y"])
    traj = integrate_base(fld, [0.4, 0.2], (0.0, 1.0))
    flow = integrate_variational(traj, 3)
    t = 0.5
    fd = five_point(lambda s: flow.upsilon(s).to_dense(), t, 1e-3)
    a = assemble_lve(traj.blocks(t, 3), 3).to_dense()
    exact = a @ flow.upsilon(t).to_dense()
    np.testing.assert_allclose(fd, exact, atol=1e-6 * np.max(np.abs(exact)))


def test_backward_integration():
    traj = integrate_base(FIELD, Z0, (0.0, -1.0))
    np.testing.assert_allclose(traj.phi(-1.0), Z0 / 1.5, rtol=1e-11)
    flow = integrate_variational(traj, 2)
    np.testing.assert_allclose(flow.y(2, -1.0), _flow_partials(-1.0, 2), rtol=1e-7, atol=1e-10)


def test_pivot_vanishing_at_start_and_along_path():
    with pytest.raises(PivotVanishing) as info:
        integrate_base(FIELD, [0.0, 1.0], (0, 1))
    assert info.value.t == 0.0
    crossing = VectorField.from_strings(["y", "-1"], ["x", "y"])
    with pytest.raises(PivotVanishing) as info:
        integrate_base(crossing, [0.0, 0.5], (0, 1))
    assert info.value.t == pytest.approx(0.5, abs=1e-9)
    assert "X_1" in str(info.value)
    with pytest.raises(ValueError):
        integrate_base(FIELD, Z0, (0, 1), pivot=2)
    with pytest.raises(ValueError):
        integrate_base(FIELD, [1.0], (0, 1))


def test_blow_up_is_an_integration_error():
    with pytest.raises(IntegrationError):
        integrate_base(FIELD, [1.0, 1.0], (0.0, 2.0))


def test_path_quadrature_in_time_and_along_the_pivot():
    traj = integrate_base(FIELD, Z0, (0.0, 1.0))
    qt = path_quadrature(traj, lambda t: traj.phi(t)[0])
    # ∫ x0/(1 - x0 s) ds = -log(1 - x0 t)
    assert qt(1.0)[0] == pytest.approx(-math.log(0.5), rel=1e-9)
    np.testing.assert_array_equal(qt(0.0), [0.0])
    qp = path_quadrature(traj, lambda t: np.array([1.0, traj.phi(t)[0]]), variable="pivot")
    x1 = traj.phi(1.0)[0]
    np.testing.assert_allclose(qp(1.0), [x1 - 0.5, (x1**2 - 0.25) / 2], rtol=1e-9)
    with pytest.raises(ValueError):
        path_quadrature(traj, lambda t: 1.0, variable="x")
