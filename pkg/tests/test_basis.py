import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from curvemix.basis import (
    BasisSpec,
    InvalidInputError,
    bspline_design,
    curve_designs,
    polynomial_design,
)
from oracles import bspline_row


def test_polynomial_rows():
    X = polynomial_design([0, 0.5, 1], 1).values
    np.testing.assert_array_equal(X, [[1, 0], [1, 0.5], [1, 1]])
    np.testing.assert_array_equal(polynomial_design([2.0], 2).values, [[1, 2, 4]])
    np.testing.assert_array_equal(polynomial_design([-3.7], 0).values, [[1]])


def test_polynomial_shape_and_intercept(rng):
    x = rng.uniform(-1, 1, 17)
    for p in range(6):
        X = polynomial_design(x, p)
        assert X.shape == (17, p + 1)
        np.testing.assert_array_equal(X.values[:, 0], 1.0)
        assert X.source_spec == BasisSpec.polynomial(p)


def test_design_is_read_only():
    X = polynomial_design([0.0, 1.0], 1)
    with pytest.raises(ValueError):
        X.values[0, 0] = 5.0


@pytest.mark.parametrize("bad", [[0.0, np.nan], [np.inf, 1.0]])
def test_non_finite_grid_rejected(bad):
    with pytest.raises(InvalidInputError):
        polynomial_design(bad, 2)
    with pytest.raises(InvalidInputError):
        bspline_design(bad, 2)


def test_linear_bspline_is_hat_functions():
    X = bspline_design([0, 0.5, 1], 1).values
    np.testing.assert_allclose(X, [[1, 0], [0.5, 0.5], [0, 1]], atol=1e-15)


def test_cubic_bspline_against_recursion():
    X = bspline_design([0.25], 3, [0.5], bounds=(0.0, 1.0)).values
    np.testing.assert_allclose(X[0], bspline_row(0.25, 3, [0.5], 0.0, 1.0), atol=1e-12)
    assert X.shape == (1, 5)


def test_bspline_matches_scipy_design_matrix(rng):
    x = np.sort(rng.uniform(0, 2, 40))
    knots = [0.4, 0.9, 1.5]
    lo, hi = x.min(), x.max()
    X = bspline_design(x, 3, knots).values
    t = np.r_[[lo] * 4, knots, [hi] * 4]
    ref = BSpline.design_matrix(x, t, 3).toarray()
    np.testing.assert_allclose(X, ref, atol=1e-12)


@pytest.mark.parametrize("knots", [[0.0], [1.0], [1.2], [0.6, 0.4], [0.5, 0.5]])
def test_bad_knots(knots):
    with pytest.raises(InvalidInputError):
        bspline_design(np.linspace(0, 1, 5), 2, knots)


def test_polynomial_spec_rejects_knots():
    with pytest.raises(InvalidInputError):
        BasisSpec("polynomial", 2, (0.5,))
    with pytest.raises(InvalidInputError):
        BasisSpec("polynomial", -1)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=30, unique=True),
    st.integers(0, 4),
    st.integers(0, 5),
)
def test_partition_of_unity(xs, p, n_knots):
    x = np.array(xs)
    if x.max() - x.min() < 1e-3:
        return
    spec = BasisSpec.bspline_uniform(p, n_knots, x)
    X = bspline_design(x, p, spec.interior_knots).values
    assert np.all(X >= -1e-15)
    np.testing.assert_allclose(X.sum(axis=1), 1.0, atol=1e-12)
    assert X.shape[1] == p + 1 + n_knots


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_bspline_without_knots_spans_polynomials(rng, p):
    x = np.linspace(0, 1, 25)
    coef = rng.normal(size=p + 1)
    y = polynomial_design(x, p).values @ coef
    for X in (polynomial_design(x, p).values, bspline_design(x, p).values):
        fitted = X @ np.linalg.lstsq(X, y, rcond=None)[0]
        np.testing.assert_allclose(fitted, y, atol=1e-8)


def test_uniform_knots():
    spec = BasisSpec.bspline_uniform(3, 3, [0.0, 2.0])
    assert spec.interior_knots == (0.5, 1.0, 1.5)
    assert spec.n_coef == 7
    assert BasisSpec.from_dict(spec.to_dict()) == spec


def test_curve_designs_share_knot_vector():
    grids = np.array([[0.0, 0.3, 0.6], [0.1, 0.5, 1.0]])
    spec = BasisSpec("bspline", 2, (0.5,))
    X = curve_designs(spec, grids)
    assert X.shape == (2, 3, 4)
    np.testing.assert_allclose(X[0], bspline_design(grids[0], 2, [0.5], bounds=(0, 1)).values)
    shared = curve_designs(BasisSpec.polynomial(1), np.tile([0.0, 1.0], (4, 1)))
    assert shared.shape == (4, 2, 2)
