import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.corpus import generate_corpus
from core.errors import NumericalError
from core.grid import BallFamily, GridDomain, GridFunction, sample
from core.norms import (
    NormParams,
    campanato_classical,
    campanato_operator,
    is_degenerate,
    morrey_norm,
    mtype_norm,
    norm_table,
    profile_rows,
)
from helpers import bump, mode

PARAMS = NormParams(2.0, 0.5)


def test_morrey_norm_of_one(line, line_family):
    value = morrey_norm(GridFunction.constant(line, 1.0), PARAMS, line_family)
    # r^{-1/2} |B| grows with r, so the whole period wins
    assert value.value == pytest.approx(math.sqrt(16.0 / math.sqrt(8.0)), rel=1e-12)
    assert value.argmax_ball.radius == 8.0
    assert max(value.per_radius_profile.values()) == pytest.approx(value.value)
    assert [r for r, _ in profile_rows(value)] == sorted(line_family.radii)


def test_morrey_norm_of_an_interval_indicator(line, line_family):
    # r^{-1/2} |B(0, r) ∩ [-1, 1]| peaks at r = 1 with value 2
    f = sample(line, lambda x: (np.abs(x[0]) <= 1.0).astype(float))
    value = morrey_norm(f, NormParams(1.0, 0.5), line_family)
    assert value.argmax_ball.radius == pytest.approx(1.0)
    assert value.argmax_ball.center == pytest.approx((0.0,))
    assert abs(value.value - 2.0) <= line.spacing * (1 + 1e-9)


def test_zero_has_zero_norms(line, line_engine, line_family):
    zero = GridFunction.zeros(line)
    assert morrey_norm(zero, PARAMS, line_family).value == 0.0
    assert campanato_classical(zero, PARAMS, line_family).value == 0.0
    assert campanato_operator(zero, line_engine, PARAMS, line_family).value == 0.0


def test_constants_have_no_oscillation(line, line_engine, line_family):
    f = GridFunction.constant(line, -2.5)
    assert campanato_classical(f, PARAMS, line_family).value <= 1e-12
    operator_value = campanato_operator(f, line_engine, PARAMS, line_family).value
    assert is_degenerate(operator_value, f)


def test_classical_oscillation_is_bounded_by_twice_morrey(line, line_family):
    for item in generate_corpus(["modes:2", "bumps:3", "indicators:2"], line, seed=3):
        classical = campanato_classical(item.f, PARAMS, line_family).value
        assert classical <= 2.0 * morrey_norm(item.f, PARAMS, line_family).value * (1 + 1e-12)


def test_morrey_triangle_inequality(line, line_family):
    f, g = bump(line), mode(line, 3)
    total = morrey_norm(f + g, PARAMS, line_family).value
    assert total <= (morrey_norm(f, PARAMS, line_family).value + morrey_norm(g, PARAMS, line_family).value) * (1 + 1e-12)


@settings(deadline=None, max_examples=15)
@given(st.floats(min_value=-50.0, max_value=50.0).filter(lambda c: abs(c) > 1e-3))
def test_norms_are_homogeneous(c):
    domain = GridDomain(1, 8.0, 64)
    family = BallFamily.default(domain)
    f = bump(domain)
    assert morrey_norm(c * f, PARAMS, family).value == pytest.approx(abs(c) * morrey_norm(f, PARAMS, family).value, rel=1e-10)
    assert campanato_classical(c * f, PARAMS, family).value == pytest.approx(
        abs(c) * campanato_classical(f, PARAMS, family).value, rel=1e-10)


def test_operator_campanato_sees_the_potential(line, line_engine, schrodinger_engine, line_family):
    # constants oscillate against e^{-tV} but not against the free heat flow
    f = GridFunction.constant(line, 1.0)
    assert campanato_operator(f, schrodinger_engine, PARAMS, line_family).value > 0.1
    assert campanato_operator(f, line_engine, PARAMS, line_family).value <= 1e-6


def test_mtype_norm_weights_the_tail(line):
    near = bump(line, 0.5)
    far = GridFunction(line, np.roll(near.values, 48))
    assert mtype_norm(far, 2.0, 1.0) < mtype_norm(near, 2.0, 1.0)
    with pytest.raises(NumericalError):
        mtype_norm(near, 2.0, 0.0)


def test_norm_table_columns(line, line_engine, line_family):
    row = norm_table(bump(line), line_engine, PARAMS, line_family, betas=(1.0, 2.0))
    assert set(row) == {'morrey', 'campanato_classical', 'campanato_operator', 'mtype_beta_1', 'mtype_beta_2'}


def test_parameter_validation(line, line_engine, line_family):
    with pytest.raises(NumericalError):
        NormParams(0.5, 0.5)
    with pytest.raises(NumericalError):
        NormParams(2.0, 0.0)
    with pytest.raises(NumericalError, match="strictly inside"):
        morrey_norm(bump(line), NormParams(2.0, 1.0), line_family)
    with pytest.raises(NumericalError, match="does not match"):
        campanato_operator(bump(line), line_engine, NormParams(2.0, 0.5, m=1.0), line_family)


def test_expected_slope():
    assert NormParams(2.0, 0.5).expected_slope(1) == pytest.approx(-0.125)
    assert NormParams(2.0, 0.5, m=1.0).expected_slope(3) == pytest.approx(-1.25)
