import math

import numpy as np
import pytest

from core.dirichlet import (
    HeightGrid,
    Provenance,
    SolutionField,
    carleson_functional,
    check_extension_consistency,
    pde_residual,
    poisson_extension,
    square_function_norm,
    trace_recover,
)
from core.errors import NumericalError
from core.grid import BallFamily, GridFunction
from core.norms import NormParams
from core.spectral import poisson_apply
from assets.dirichlet_forward.dirichlet_forward import carleson_mode_oracle
from helpers import bump, mode

PARAMS = NormParams(2.0, 0.5, m=1.0)


@pytest.fixture
def heights():
    return HeightGrid.geometric(0.25, 4.0, 60)


def test_height_grid_validation(line):
    with pytest.raises(NumericalError, match="log-spaced"):
        HeightGrid((0.5, 1.0, 3.0))
    with pytest.raises(NumericalError):
        HeightGrid((1.0,))
    with pytest.raises(NumericalError, match="below 2h"):
        HeightGrid.geometric(0.1, 1.0, 10).check_domain(line)
    with pytest.raises(NumericalError, match="R/2"):
        HeightGrid.geometric(0.5, 5.0, 10).check_domain(line)


def test_extension_of_a_mode(line, line_engine, heights):
    f = mode(line)
    field = poisson_extension(line_engine, f, heights)
    assert field.provenance is Provenance.EXTENDED
    k = math.pi / line.half_width
    for j in (0, 30, 59):
        expected = math.exp(-heights.heights[j] * k) * f.values
        assert np.allclose(field.slices[j], expected, atol=1e-12)


def test_slices_interpolate_in_log_height(line, line_engine, heights):
    field = poisson_extension(line_engine, mode(line), heights)
    assert np.array_equal(field.slice_at(heights.heights[10]).values, field.slices[10])
    between = math.sqrt(heights.heights[10] * heights.heights[11])
    midpoint = field.slice_at(between).values
    assert np.allclose(midpoint, 0.5 * (field.slices[10] + field.slices[11]))
    with pytest.raises(NumericalError):
        field.slice_at(8.0)


def test_extension_solves_the_equation(line, line_engine):
    # central differences in log t need a fine height grid
    heights = HeightGrid.geometric(0.25, 4.0, 200)
    field = poisson_extension(line_engine, mode(line), heights)
    assert pde_residual(field, line_engine) <= 1e-3
    frozen = SolutionField.constant_in_height(mode(line), heights)
    assert pde_residual(frozen, line_engine) > 0.5


def test_residual_converges_at_second_order(line, line_engine):
    f = bump(line)
    coarse = pde_residual(poisson_extension(line_engine, f, HeightGrid.geometric(0.25, 4.0, 50)), line_engine)
    fine = pde_residual(poisson_extension(line_engine, f, HeightGrid.geometric(0.25, 4.0, 99)), line_engine)
    assert 3.5 <= coarse / fine <= 4.5


def test_mode_residual_in_a_narrow_window(line, line_engine):
    field = poisson_extension(line_engine, mode(line, 4), HeightGrid.geometric(1.0, 1.25, 200))
    assert pde_residual(field, line_engine) <= 1e-6


def test_carleson_matches_the_mode_closed_form(line, line_engine, line_family):
    heights = HeightGrid.geometric(0.25, 4.0, 200)
    oracle = carleson_mode_oracle(line_engine, PARAMS, line_family, heights, k=4)
    assert oracle["expected"] > 0
    assert oracle["relative_error"] <= 0.01


def test_consistency_separates_extensions(line, line_engine, heights):
    f = mode(line) + bump(line)
    assert check_extension_consistency(poisson_extension(line_engine, f, heights), line_engine) <= 1e-10
    frozen = SolutionField.constant_in_height(mode(line), heights)
    assert check_extension_consistency(frozen, line_engine) > 1e-3


def test_carleson_of_constants_vanishes(line, line_engine, line_family, heights):
    field = poisson_extension(line_engine, GridFunction.constant(line, 2.0), heights)
    value = carleson_functional(field, PARAMS, line_family, line_engine)
    assert value.value <= 1e-20
    assert value.skipped_balls > 0


def test_carleson_is_quadratic(line, line_engine, line_family, heights):
    field = poisson_extension(line_engine, mode(line, 2), heights)
    base = carleson_functional(field, PARAMS, line_family, line_engine).value
    scaled = carleson_functional(field.scaled(3.0), PARAMS, line_family, line_engine).value
    assert base > 0
    assert scaled == pytest.approx(9.0 * base, rel=1e-10)


def test_square_function_below_carleson(line, line_engine, line_family, heights):
    f = mode(line, 2)
    carleson = carleson_functional(poisson_extension(line_engine, f, heights), PARAMS, line_family, line_engine)
    square = square_function_norm(line_engine, f, PARAMS, line_family, heights)
    assert square.value <= (carleson.value + carleson.collar_bound) * (1 + 1e-3)


def test_trace_recovery_round_trip(fine_line, fine_engine):
    family = BallFamily.default(fine_line)
    heights = HeightGrid.geometric(1.0 / 16.0, 4.0, 97)
    f = mode(fine_line, 2)
    xi = math.pi * 2 / fine_line.half_width
    recovery = trace_recover(poisson_extension(fine_engine, f, heights), fine_engine, PARAMS, [4, 8, 16], family)
    assert not recovery.flagged
    errors = recovery.trace_errors(f)
    # f_K = e^{-xi/K} f exactly, and x = 0 lies in the inner box
    assert errors[-1] == pytest.approx(1.0 - math.exp(-xi / 16), rel=1e-9)
    assert errors[0] > errors[1] > errors[2]
    assert np.max(np.abs(recovery.limit.values - f.values)) <= 1e-3
    assert recovery.norm_spread == pytest.approx(math.expm1(xi * (1 / 4 - 1 / 16)), rel=1e-6)
    assert recovery.boundary_step_undone
    assert np.max(np.abs(recovery.boundary.values - f.values)) <= 1e-9


def test_reconstruction_error_shrinks_with_k(fine_line, fine_engine):
    family = BallFamily.default(fine_line)
    heights = HeightGrid.geometric(1.0 / 16.0, 4.0, 97)
    field = poisson_extension(fine_engine, mode(fine_line, 3), heights)
    recovery = trace_recover(field, fine_engine, PARAMS, [2, 4, 8, 16], family)
    errors = recovery.reconstruction_errors
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert recovery.reconstruction_error == errors[-1]
    assert max(recovery.semigroup_defects) <= 1e-9


def test_extension_not_flagged_without_boundary_undo(fine_line, fine_engine):
    # sqrt(mu_max) / 4 is far past log(1e6), so only f_K = u(., 1/4) is available
    family = BallFamily.default(fine_line)
    heights = HeightGrid.geometric(0.25, 4.0, 97)
    f = mode(fine_line, 2)
    recovery = trace_recover(poisson_extension(fine_engine, f, heights), fine_engine, PARAMS, [2, 4], family)
    assert not recovery.boundary_step_undone
    assert recovery.boundary is None
    assert not recovery.flagged
    assert np.allclose(recovery.f.values, poisson_apply(fine_engine, 0.25, f).values, atol=1e-12)
    frozen = SolutionField.constant_in_height(f, heights)
    assert trace_recover(frozen, fine_engine, PARAMS, [2, 4], family).flagged


def test_frozen_field_is_flagged(fine_line, fine_engine):
    family = BallFamily.default(fine_line)
    heights = HeightGrid.geometric(1.0 / 16.0, 4.0, 97)
    frozen = SolutionField.constant_in_height(mode(fine_line, 2), heights)
    assert trace_recover(frozen, fine_engine, PARAMS, [8, 16], family).flagged


def test_k_schedule_must_increase(fine_line, fine_engine):
    family = BallFamily.default(fine_line)
    heights = HeightGrid.geometric(1.0 / 16.0, 4.0, 97)
    field = poisson_extension(fine_engine, mode(fine_line), heights)
    with pytest.raises(NumericalError):
        trace_recover(field, fine_engine, PARAMS, [16, 8], family)


def test_field_shape_is_checked(line, heights):
    with pytest.raises(NumericalError, match="shape"):
        SolutionField(line, heights, np.zeros((3, 128)))
