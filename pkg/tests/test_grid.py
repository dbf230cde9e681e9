import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import GridError
from core.grid import (
    Ball,
    BallFamily,
    GridDomain,
    GridFunction,
    ball_lp_integral,
    ball_mean,
    family_lp_integrals,
    family_means,
    sample,
)


def test_domain_geometry(line):
    assert line.spacing == 0.125
    assert line.origin_index == (64,)
    assert line.axis()[0] == -8.0
    assert line.axis()[64] == 0.0
    assert line.coordinates().shape == (1, 128)


@pytest.mark.parametrize("dim,points", [(1, 127), (4, 8), (0, 8)])
def test_invalid_domain_rejected(dim, points):
    with pytest.raises(GridError):
        GridDomain(dim, 8.0, points)


def test_memory_budget(monkeypatch):
    monkeypatch.setenv('CAMPANATO_MAX_POINTS', '100')
    with pytest.raises(GridError, match="memory budget"):
        GridDomain(2, 8.0, 16)


def test_grid_function_rejects_nonfinite(line):
    values = np.zeros(128)
    values[3] = np.nan
    with pytest.raises(GridError, match="non-finite"):
        GridFunction(line, values)


def test_grid_function_is_read_only(line):
    f = GridFunction.constant(line, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_snap_wraps_on_periodic_domain(line, truncated_line):
    assert line.snap([8.0]) == (0,)
    with pytest.raises(GridError):
        truncated_line.snap([9.0])


def test_minimal_image_distance(line, truncated_line):
    assert line.offset_distance((0,))[127] == pytest.approx(0.125)
    assert truncated_line.offset_distance((0,))[63] == pytest.approx(63 * 0.25)


def test_singular_samples_need_regularization(line):
    expr = lambda x: np.abs(x[0]) ** -0.5
    with pytest.raises(GridError, match="not finite"):
        sample(line, expr)
    f = sample(line, expr, regularize=True)
    assert np.all(np.isfinite(f.values))
    assert f.values[64] > f.values[65]


def test_ball_integral_counts_boundary_nodes(line):
    ones = GridFunction.constant(line, 1.0)
    ball = Ball.on(line, [0.0], 1.0)
    # 17 nodes at spacing 1/8, including both endpoints
    assert ball_lp_integral(ones, ball, 2.0) == pytest.approx(17 * 0.125)
    assert ball_mean(ones, ball) == 1.0


def test_ball_radius_limits(line):
    with pytest.raises(GridError):
        Ball.on(line, [0.0], 0.1)
    with pytest.raises(GridError):
        Ball.on(line, [0.0], 9.0)


def test_default_family(line_family, line):
    assert line_family.stride == 8
    assert line_family.n_centers == 16
    assert line_family.radii[0] == 8.0
    assert line_family.radii[-1] == pytest.approx(2.0 * line.spacing)
    balls = list(line_family.balls())
    assert len(balls) == line_family.n_centers * len(line_family.radii)
    assert {ball.radius for ball in balls} == set(line_family.radii)


def test_membership_matches_ball_integrals(line, line_family):
    ones = np.ones(line.shape)
    integrals = family_lp_integrals(ones, line_family, 1.0)
    assert np.allclose(integrals, 17 * 0.125)
    # the whole period fits in a ball of radius R
    assert np.allclose(family_lp_integrals(ones, line_family, 8.0), 16.0)


def test_truncated_balls_lose_outside_nodes(truncated_line):
    family = BallFamily.default(truncated_line)
    integrals = family_lp_integrals(np.ones(truncated_line.shape), family, 8.0)
    # the leftmost center sits on the edge of the box
    assert integrals.min() < integrals.max()


def test_refined_family_keeps_every_ball(line_family):
    refined = line_family.refined(1)
    assert refined.stride == 4
    assert set(map(tuple, line_family.centers())) <= set(map(tuple, refined.centers()))
    assert refined.radii[:len(line_family.radii)] == line_family.radii


@settings(deadline=None, max_examples=20)
@given(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_means_of_constants(value):
    domain = GridDomain(1, 8.0, 64)
    family = BallFamily.default(domain)
    f = GridFunction.constant(domain, value)
    for radius in family.radii:
        assert np.allclose(family_means(f, family, radius), value, rtol=1e-12, atol=1e-12)
