import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstarext.errors import SymbolVanishesOnCircle
from cstarext.shift import LaurentSymbol, ShiftClassOperator, hermitian_function, winding_number
from cstarext.testkit import random_shift_isometry

S = ShiftClassOperator.shift(1)
SH = ShiftClassOperator.shift(-1)
ONE = ShiftClassOperator.identity()


def random_class_element(rng, max_degree=4, max_support=8):
    degrees = rng.choice(np.arange(-max_degree, max_degree + 1), size=rng.integers(1, 4), replace=False)
    symbol = {int(k): complex(rng.standard_normal(), rng.standard_normal()) for k in degrees}
    n = int(rng.integers(0, max_support + 1))
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return ShiftClassOperator(symbol, f)


def test_shift_times_adjoint():
    p = S @ SH
    assert p.symbol == LaurentSymbol({0: 1})
    assert p.entries() == {(0, 0): -1}


def test_adjoint_times_shift_is_identity():
    assert SH @ S == ONE


def test_symmetric_square():
    h = ShiftClassOperator({1: 1, -1: 1})
    sq = h @ h
    assert sq.symbol == LaurentSymbol({2: 1, 0: 2, -2: 1})
    assert sq.entries() == {(0, 0): -1}
    np.testing.assert_allclose(sq.truncate(16), (h.truncate(32) @ h.truncate(32))[:16, :16], atol=1e-12)


def test_s_squared_has_no_correction():
    assert S @ S == ShiftClassOperator.shift(2)


@pytest.mark.parametrize("seed", range(40))
def test_product_matches_dense_window(seed):
    rng = np.random.default_rng(seed)
    a, b = random_class_element(rng), random_class_element(rng)
    band = 8 + 8
    dense = (a.truncate(64 + band) @ b.truncate(64 + band))[:64, :64]
    np.testing.assert_allclose((a @ b).truncate(64), dense, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_adjoint_reverses_products(seed):
    rng = np.random.default_rng(100 + seed)
    a, b = random_class_element(rng), random_class_element(rng)
    np.testing.assert_allclose((a @ b).H.truncate(48), (b.H @ a.H).truncate(48), atol=1e-12)
    assert a.H.H == a


def test_adjoint_examples():
    assert S.H.symbol == LaurentSymbol({-1: 1})
    h = ShiftClassOperator({1: 1, -1: 1})
    assert h.H == h


def test_defects_of_shifts():
    d = S.defects()
    assert d.left.is_zero() and d.right.entries() == {(0, 0): 1}
    d2 = ShiftClassOperator.shift(2).defects()
    assert d2.right.entries() == {(0, 0): 1, (1, 1): 1} and d2.finite_rank


def test_defects_of_symmetric_element():
    h = ShiftClassOperator({1: 0.5, -1: 0.5})
    d = h.defects()
    expected = LaurentSymbol({0: 1}) - LaurentSymbol({1: 0.5, -1: 0.5}) * LaurentSymbol({1: 0.5, -1: 0.5})
    assert d.left.symbol == expected and d.right.symbol == expected
    assert not d.finite_rank
    np.testing.assert_allclose(d.left.truncate(20), d.right.truncate(20), atol=1e-14)


def test_winding_examples():
    assert winding_number(LaurentSymbol({1: 1})) == 1
    assert winding_number(LaurentSymbol({-2: 1})) == -2
    # z^3 (2 + z) has the outer factor 2 + z
    assert winding_number(LaurentSymbol({3: 2, 4: 1})) == 3
    assert winding_number(LaurentSymbol({3: 2, 4: 1}), samples=4096) == 3


def test_winding_rejects_zero_on_circle():
    with pytest.raises(SymbolVanishesOnCircle):
        winding_number(LaurentSymbol({0: 1, 1: 1}))


def test_truncate_examples():
    np.testing.assert_allclose(S.truncate(3), np.eye(3, k=-1))
    e = ShiftClassOperator.matrix_unit(0, 0)
    for n in (1, 4, 9):
        m = np.zeros((n, n))
        m[0, 0] = 1
        np.testing.assert_allclose(e.truncate(n), m)


def test_truncate_of_product_with_band():
    rng = np.random.default_rng(7)
    a, b = random_class_element(rng, 3, 5), random_class_element(rng, 3, 5)
    n, band = 20, 3 + 5 + 3
    ref = (a.truncate(n + band) @ b.truncate(n + band))[:n, :n]
    np.testing.assert_allclose((a @ b).truncate(n), ref, atol=1e-12)


def test_isometry_predicates():
    assert S.is_isometry() and not S.is_coisometry()
    assert SH.is_coisometry() and not SH.is_isometry()
    theta = 0.9
    u = ONE + ShiftClassOperator.matrix_unit(0, 0, np.exp(1j * theta) - 1)
    assert u.is_unitary()


def test_canonical_form_drops_restated_symbol():
    # e_00 added and removed leaves no stored perturbation
    x = (S + ShiftClassOperator.matrix_unit(0, 0)) - ShiftClassOperator.matrix_unit(0, 0)
    assert x == S and x.support_bound == 0


def test_apply_matches_truncation():
    rng = np.random.default_rng(8)
    a = random_class_element(rng)
    x = rng.standard_normal(10) + 0j
    y = a.apply(x, 30)
    np.testing.assert_allclose(y[:20], (a.truncate(40) @ np.concatenate([x, np.zeros(30)]))[:20], atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_index_law_on_generated_isometries(seed):
    a, meta = random_shift_isometry(3, np.random.default_rng(seed))
    assert a.is_isometry()
    r = int(round(np.trace(a.defects().right.perturbation).real))
    assert r == meta["multiplicity"] == winding_number(a.symbol)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_defects_of_contractions_are_positive(seed):
    from cstarext.testkit import random_shift_contraction

    x = random_shift_contraction(np.random.default_rng(seed))
    for d in x.defects()[:2]:
        assert np.linalg.eigvalsh(d.truncate(48)).min() >= -1e-9


def test_hermitian_function_square_root():
    rng = np.random.default_rng(9)
    f = rng.standard_normal((3, 3))
    h = ShiftClassOperator({0: 2.0}, f @ f.T)
    r = hermitian_function(h, np.sqrt)
    np.testing.assert_allclose((r @ r).truncate(10), h.truncate(10), atol=1e-12)
