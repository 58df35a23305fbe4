import zlib

import numpy as np
import pytest

import properties
from oracles import naive_sym_product, random_block, vector_power
from varjet.symblock import (
    BlockSeries,
    DimensionError,
    JetStrip,
    SingularBlockError,
    SymBlock,
    TriangularTruncation,
    basis_row,
    column_block,
    identity_block,
    id_power_product,
    multinomial_weights,
    row_block,
    sym_exp_strip,
    sym_power,
    sym_product,
    sym_vector_power,
    triangular_inverse,
    zeros_block,
)


@pytest.mark.parametrize("name", sorted({**properties.ALGEBRA, **properties.DIFFERENTIAL}))
def test_property(name):
    fn = {**properties.ALGEBRA, **properties.DIFFERENTIAL}[name]
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    worst = max(fn(rng) for _ in range(15))
    assert worst < properties.tolerance(name)


def test_anyprods_fails_for_order_two_factors():
    # The two-factor rule for square blocks does not extend to (2, 2)-blocks:
    # expanding x1 = u⊙u, x2 = w⊙w produces cross terms absent from the right side.
    n = 2
    m = SymBlock(1, 1, n, n, np.array([[1.0, 2.0], [0.0, 1.0]]))
    a = sym_power(m, 2)
    b = identity_block(n, 2)
    u = column_block([1.0, 0.0])
    w = column_block([0.0, 1.0])
    x1, x2 = sym_product(u, u), sym_product(w, w)
    left = sym_product(a, b) @ sym_product(x1, x2)
    right = 0.5 * (sym_product(a @ x1, b @ x2) + sym_product(b @ x1, a @ x2))
    assert properties.rel(left.entries, right.entries) > 0.1
    assert properties.prop_anyprods(np.random.default_rng(0), k=1) < 1e-12


def test_product_of_basis_vectors_is_monomial_product():
    n = 3
    a = column_block(basis_row(n, (1, 0, 0)))
    b = column_block(basis_row(n, (0, 1, 0)))
    prod = sym_product(a, b)
    assert prod.type == (2, 0)
    np.testing.assert_array_equal(prod.entries[:, 0], basis_row(n, (1, 1, 0)))


def test_vector_power_coordinates():
    v = np.array([2.0, -1.0, 0.5])
    for k in range(5):
        np.testing.assert_allclose(sym_vector_power(v, k), vector_power(v, k), rtol=1e-14)
    np.testing.assert_array_equal(multinomial_weights(2, 2), [1, 2, 1])


def test_identity_powers_are_identities():
    for n in (1, 2, 3):
        for k in range(1, 5):
            got = sym_product(identity_block(n, 1), identity_block(n, k - 1)) if k > 1 else identity_block(n, 1)
            np.testing.assert_allclose(got.entries, np.eye(got.shape[0]), atol=1e-15)


def test_complex_entries_supported():
    rng = np.random.default_rng(3)
    a = random_block(rng, 1, 1, 2)
    b = SymBlock(1, 1, 2, 2, a.entries * (1 + 2j))
    got = sym_product(b, b)
    assert np.iscomplexobj(got.entries)
    np.testing.assert_allclose(got.entries, naive_sym_product(b, b), atol=1e-14)


def test_block_validation():
    with pytest.raises(DimensionError):
        SymBlock(1, 1, 2, 2, np.zeros((3, 2)))
    with pytest.raises(DimensionError):
        sym_product(zeros_block(1, 1, 2), zeros_block(1, 1, 3))
    with pytest.raises(DimensionError):
        zeros_block(1, 2, 2) @ zeros_block(1, 1, 2)
    with pytest.raises(DimensionError):
        zeros_block(1, 2, 2) + zeros_block(1, 1, 2)
    with pytest.raises(ValueError):
        sym_power(identity_block(2), -1)


def test_row_block_infers_dimension():
    assert row_block(np.zeros(6), 2).dst_dim == 3
    with pytest.raises(DimensionError):
        row_block(np.zeros(5), 2)


def test_power_zero_is_scalar_one():
    p = sym_power(identity_block(3), 0)
    assert p.type == (0, 0) and p.entries[0, 0] == 1.0


def test_id_power_product_zero_is_identity_map():
    rng = np.random.default_rng(1)
    a = random_block(rng, 1, 2, 2)
    assert id_power_product(a, 0) is a


def test_strip_validation():
    with pytest.raises(DimensionError):
        JetStrip((zeros_block(1, 1, 2),))
    strip = JetStrip.from_arrays([np.zeros((2, 1)), np.eye(2)], 1, 2)
    assert strip.order == 1 and strip.dim == 2
    bad = JetStrip.from_arrays([np.ones((2, 1)), np.eye(2)], 1, 2)
    with pytest.raises(ValueError, match="order-0"):
        sym_exp_strip(bad)


def test_dense_roundtrip_and_corner():
    rng = np.random.default_rng(5)
    z = sym_exp_strip(properties.random_strip(rng, 2, 3))
    back = TriangularTruncation.from_dense(z.to_dense(), 2, 3)
    np.testing.assert_array_equal(back.to_dense(), z.to_dense())
    assert z.corner(2).to_dense().shape == (5, 5)
    np.testing.assert_array_equal(z.corner(2).to_dense(), z.to_dense()[:5, :5])


def test_triangular_inverse_detects_singular_diagonal():
    t = TriangularTruncation(2, 2, {(1, 1): zeros_block(1, 1, 2), (2, 2): identity_block(2, 2)})
    with pytest.raises(SingularBlockError) as info:
        triangular_inverse(t)
    assert info.value.order == 1


def test_block_series_rejects_order_zero_rows_in_exp():
    s = BlockSeries(2, 2, 2, {(0, 1): zeros_block(0, 1, 2)})
    with pytest.raises(ValueError):
        s.exp()


def test_exp_of_identity_series_is_diagonal_of_identities():
    e = BlockSeries(3, 2, 2, {(1, 1): identity_block(2)}).exp()
    for r in range(4):
        np.testing.assert_allclose(e.block(r, r).entries, np.eye(e.block(r, r).shape[0]), atol=1e-15)
    assert not np.any(e.block(1, 2).entries)
