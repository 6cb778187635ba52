import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftchernoff.exprlang import ExprDomainError
from shiftchernoff.fields import CoefficientSet, ScalarField, field_eval, sup_norm_estimate
from shiftchernoff.griddata import Grid, sample


def F(src):
    return ScalarField.from_text(src)


def test_field_eval_examples():
    assert field_eval(F("0.5"), 17.3) == 0.5
    assert field_eval(F("x"), -1.0) == -1.0
    assert field_eval(F("0.5+0.1*sin(x)"), math.pi / 2) == pytest.approx(0.6, abs=1e-15)


def test_field_eval_propagates_domain_error():
    with pytest.raises(ExprDomainError):
        field_eval(F("sqrt(x)"), -1.0)


def test_sample_backed_field_reads_through_interpolation():
    g = Grid(0, 1, 11)
    f = ScalarField(sample(F("x"), g), "samples")
    assert f(0.45) == pytest.approx(0.45, abs=1e-15)
    assert np.allclose(f.values([0.25, 0.55]), [0.25, 0.55], atol=1e-15)
    assert f.constant_value() is None


def test_constant_detection():
    assert F("2*pi").constant_value() == 2 * math.pi
    assert F("x - x").constant_value() is None
    assert F("0").is_zero()
    assert ScalarField.constant(-0.1)(3.0) == -0.1


def test_sup_norm_examples():
    s = sup_norm_estimate(F("sin(x)"), (-10, 10), 10001)
    assert 0.9999 <= s <= 1.0
    assert sup_norm_estimate(F("0"), (-3, 5), 17) == 0.0
    assert sup_norm_estimate(F("x"), (-2, 3), 6) == 3.0


def test_sup_norm_rejects_bad_arguments():
    with pytest.raises(ValueError):
        sup_norm_estimate(F("x"), (1, 1), 10)
    with pytest.raises(ValueError):
        sup_norm_estimate(F("x"), (0, 1), 1)
    with pytest.raises(ExprDomainError):
        sup_norm_estimate(F("1/x"), (-1, 1), 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.integers(2, 6))
def test_sup_norm_monotone_under_nested_refinement(samples, factor):
    f = F("sin(3*x) * exp(-x^2/4) + 0.1*cos(7*x)")
    coarse = sup_norm_estimate(f, (-5, 5), samples)
    fine = sup_norm_estimate(f, (-5, 5), (samples - 1) * factor + 1)
    assert fine >= coarse


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100).filter(lambda k: k != 0))
def test_sup_norm_scaling(k):
    f = F("sin(3*x) + 0.2*x")
    scaled = ScalarField.from_text(f"{abs(k)!r}*(sin(3*x) + 0.2*x)")
    if k < 0:
        scaled = ScalarField.from_text(f"-{abs(k)!r}*(sin(3*x) + 0.2*x)")
    base = sup_norm_estimate(f, (-4, 4), 801)
    got = sup_norm_estimate(scaled, (-4, 4), 801)
    assert abs(got - abs(k) * base) <= 2 * np.spacing(abs(k) * base)


def test_coefficient_set_c_sup_dominates_nodes():
    g = Grid(-8, 8, 1025)
    coeffs = CoefficientSet.for_grid("0.5", "0.2*cos(x)", "-0.1 + 0.05*sin(3*x)", g)
    assert coeffs.c_sup >= np.max(np.abs(coeffs.c.values(g.nodes)))
    assert coeffs.c_sup == pytest.approx(0.15, abs=1e-4)


def test_coefficient_set_constant():
    coeffs = CoefficientSet.constant(0.5, 0.0, -0.3)
    assert coeffs.c_sup == 0.3
    assert coeffs.a.constant_value() == 0.5
    with pytest.raises(ValueError):
        CoefficientSet(coeffs.a, coeffs.b, coeffs.c, -1.0)
