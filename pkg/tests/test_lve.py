import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oracles import random_block
from properties import five_point
from varjet.exprjet import VectorField, eval_taylor, parse
from varjet.lve import assemble_ahat, assemble_lve, dual_matrix, dual_rhs, kernel_residual
from varjet.symblock import DimensionError

SIR_VARS = ("x", "y", "z")
SIR_FIELD = ["1 - (x - 1)*x*y", "x*y^2", "-y"]
# an exact first integral of the field above
SIR_INTEGRAL = "-x*y + log(x*y + 1) + y"


def _rows(text, variables, point, order):
    tv = eval_taylor(parse(text, variables), point, order)
    return [tv.block(k) for k in range(1, order + 1)]


def test_lve_layout_is_block_upper_triangular():
    rng = np.random.default_rng(0)
    a = [random_block(rng, 1, j, 2) for j in range(5)]
    lve = assemble_lve(a, 4)
    dense = lve.to_dense()
    off = lve.offsets()
    for r in range(1, 5):
        for s in range(1, r):
            assert not np.any(dense[off[r - 1]:off[r], off[s - 1]:off[s]])
    np.testing.assert_array_equal(dual_matrix(lve), -dense.T)


def test_lve_requires_consecutive_blocks():
    rng = np.random.default_rng(1)
    a = [random_block(rng, 1, j, 2) for j in (1, 2, 4)]
    with pytest.raises(DimensionError):
        assemble_lve(a)
    with pytest.raises(DimensionError):
        assemble_lve([random_block(rng, 1, 1, 2)], order=2)
    with pytest.raises(DimensionError):
        assemble_ahat([random_block(rng, 1, 1, 2)])


@pytest.mark.parametrize("point", [(0.5, 0.2, 0.1), (1.3, -0.4, 2.0), (0.8, 0.0, 0.0)])
def test_kernel_condition_holds_for_an_exact_first_integral(point):
    fld = VectorField.from_strings(SIR_FIELD, SIR_VARS)
    order = 5
    rows = _rows(SIR_INTEGRAL, SIR_VARS, point, order)
    res = kernel_residual(rows, fld.blocks(point, order), relative=True)
    assert res.shape == (order,)
    assert np.all(res < 1e-13)


def test_kernel_condition_detects_a_non_integral():
    fld = VectorField.from_strings(SIR_FIELD, SIR_VARS)
    rows = _rows("x + y^2", SIR_VARS, (0.5, 0.2, 0.1), 3)
    assert kernel_residual(rows, fld.blocks((0.5, 0.2, 0.1), 3))[0] > 0.1


def test_ahat_dense_matches_terms():
    rng = np.random.default_rng(2)
    a = [random_block(rng, 1, j, 2) for j in range(4)]
    ahat = assemble_ahat(a, 4)
    jet = [rng.standard_normal(d) for d in (2, 3, 4, 5)]
    for k in range(1, 5):
        stacked = np.concatenate(jet[:k])
        np.testing.assert_allclose(ahat.dense(k) @ stacked, np.sum(ahat.residual_terms(jet, k), axis=0))
    assert ahat.weights(4) == [1, 3, 3, 1]


def test_dual_rhs_is_the_derivative_of_first_integral_jets():
    fld = VectorField.from_strings(SIR_FIELD, SIR_VARS)
    z0 = np.array([0.6, 0.3, 0.2])
    sol = solve_ivp(lambda t, z: fld(z), (0, 1), z0, dense_output=True, rtol=1e-13, atol=1e-15,
                    method="DOP853")
    order = 4
    t = 0.4

    def jets(s):
        return np.concatenate(_rows(SIR_INTEGRAL, SIR_VARS, sol.sol(s), order))

    fd = five_point(jets, t, 1e-3)
    rhs = np.concatenate(dual_rhs(_rows(SIR_INTEGRAL, SIR_VARS, sol.sol(t), order), fld.blocks(sol.sol(t), order)))
    np.testing.assert_allclose(fd, rhs, atol=1e-8 * max(1, np.max(np.abs(rhs))))
    # the same derivative from the dense dual matrix
    dense = dual_matrix(assemble_lve(fld.blocks(sol.sol(t), order), order))
    np.testing.assert_allclose(dense @ jets(t), rhs, atol=1e-12)
