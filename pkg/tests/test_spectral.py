import math

import numpy as np
import pytest

from core.errors import EngineError, NumericalError, QuadratureError
from core.grid import GridDomain, GridFunction, sample
from core.potentials import PotentialKind, PotentialSpec, sample_potential
from core.spectral import (
    Calculus,
    KernelBoundParams,
    KernelKind,
    Route,
    OperatorSpec,
    build_engine,
    check_domination,
    check_kernel_bound,
    fit_poisson_constant,
    gaussian_reference,
    heat_apply,
    kernel_column,
    poisson_apply,
    poisson_time_derivative,
    poisson_via_subordination,
    semigroup,
    spatial_gradient,
    spectral_gap,
)
from helpers import bump, mode


def test_laplacian_on_periodic_grid_uses_fourier(line_engine, schrodinger_engine):
    assert line_engine.route is Route.FOURIER
    assert schrodinger_engine.route is Route.EIGEN


def test_heat_fixes_constants(line_engine):
    f = GridFunction.constant(line_engine.domain, 3.0)
    assert np.allclose(heat_apply(line_engine, 1.0, f).values, 3.0, atol=1e-12)
    assert np.allclose(poisson_apply(line_engine, 1.0, f).values, 3.0, atol=1e-12)


def test_zero_time_is_identity_and_negative_time_fails(line_engine, line):
    f = mode(line)
    assert heat_apply(line_engine, 0.0, f) is f
    with pytest.raises(NumericalError):
        heat_apply(line_engine, -1.0, f)


def test_semigroup_law(line_engine, line):
    f = bump(line) + mode(line, 3)
    composed = heat_apply(line_engine, 0.3, heat_apply(line_engine, 0.7, f))
    assert np.allclose(composed.values, heat_apply(line_engine, 1.0, f).values, atol=1e-12)
    composed = poisson_apply(line_engine, 0.3, poisson_apply(line_engine, 0.7, f))
    assert np.allclose(composed.values, poisson_apply(line_engine, 1.0, f).values, atol=1e-12)


def test_modes_are_eigenfunctions(line_engine, line):
    f = mode(line, 2)
    k = 2 * math.pi / line.half_width
    assert np.allclose(heat_apply(line_engine, 0.5, f).values, math.exp(-0.5 * k * k) * f.values, atol=1e-12)
    assert np.allclose(poisson_apply(line_engine, 0.5, f).values, math.exp(-0.5 * k) * f.values, atol=1e-12)


def test_poisson_time_derivative_on_a_mode(line_engine, line):
    f = mode(line, 2)
    k = 2 * math.pi / line.half_width
    derivative = poisson_time_derivative(line_engine, 0.5, f)
    assert np.allclose(derivative.values, -k * math.exp(-0.5 * k) * f.values, atol=1e-12)
    # constants do not move
    assert np.max(np.abs(poisson_time_derivative(line_engine, 0.5, GridFunction.constant(line, 1.0)).values)) <= 1e-12


def test_heat_kernel_is_gaussian(line_engine, line):
    column = kernel_column(line_engine, 1.0, line.origin_index)
    reference = gaussian_reference(line, 1.0, line.origin_index)
    assert np.max(np.abs(column.values - reference)) <= 1e-10


def test_poisson_constant_is_one_over_pi(line_engine, line):
    fit = fit_poisson_constant(line_engine, 1.0, line.origin_index)
    assert fit.constant == pytest.approx(1.0 / math.pi, rel=1e-4)


def test_subordination_matches_sqrt_calculus(line_engine, line):
    f = mode(line, 1) + 0.5 * mode(line, 3)
    direct = poisson_apply(line_engine, 1.0, f)
    oracle = poisson_via_subordination(line_engine, 1.0, f)
    assert np.max(np.abs(direct.values - oracle.values)) <= 1e-8
    with pytest.raises(QuadratureError):
        poisson_via_subordination(line_engine, 1.0, f, nodes=20)


def test_calculus_switch_shares_the_spectrum(line_engine, line):
    poisson_engine = line_engine.with_calculus(line_engine.spec.as_poisson())
    f = bump(line)
    assert poisson_engine.eigenvalues is line_engine.eigenvalues
    assert np.allclose(semigroup(poisson_engine, 0.8, f).values, poisson_apply(line_engine, 0.8, f).values)


def test_spectral_gap(line_engine, line):
    assert spectral_gap(line_engine) == pytest.approx((math.pi / line.half_width) ** 2, rel=1e-12)


def test_constant_potential_shifts_the_spectrum(line, schrodinger_engine):
    free = build_engine(OperatorSpec.laplacian(route=Route.EIGEN), line)
    f = bump(line)
    shifted = heat_apply(schrodinger_engine, 0.5, f).values
    assert np.allclose(shifted, math.exp(-0.5) * heat_apply(free, 0.5, f).values, atol=1e-10)


def test_potential_dominated_by_free_kernel(line):
    V = sample_potential(PotentialSpec(PotentialKind.BUMP, 2.0, width=1.5), line)
    engine = build_engine(OperatorSpec.schrodinger(V), line)
    assert check_domination(engine, [0.1, 1.0]) <= 1e-10


def test_truncated_spectrum_is_the_discrete_sine_formula(truncated_line):
    engine = build_engine(OperatorSpec.laplacian(), truncated_line)
    n, h = truncated_line.points_per_axis, truncated_line.spacing
    j = np.arange(1, n + 1)
    expected = 4.0 / h ** 2 * np.sin(j * np.pi / (2 * (n + 1))) ** 2
    assert np.allclose(np.sort(np.ravel(engine.eigenvalues)), expected, rtol=1e-10, atol=1e-10)
    shifted = build_engine(OperatorSpec.schrodinger(GridFunction.constant(truncated_line, 1.0)), truncated_line)
    assert np.allclose(np.sort(np.ravel(shifted.eigenvalues)), expected + 1.0, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("boundary", ["periodic", "truncated_dirichlet"])
def test_semigroups_preserve_positivity_and_contract(boundary):
    domain = GridDomain(1, 8.0, 64, boundary)
    engine = build_engine(OperatorSpec.laplacian(), domain)
    h, R = domain.spacing, domain.half_width
    f = bump(domain) + sample(domain, lambda x: (np.abs(x[0] - 2.0) <= 1.0).astype(float))
    top = f.values.max()
    for t in np.geomspace(4.0 * h * h, (R / 4.0) ** 2, 6):
        u = heat_apply(engine, t, f)
        assert u.values.min() >= -1e-8 * top
        assert u.sup() <= f.sup() + 1e-8
    for t in np.geomspace(4.0 * h, R / 2.0, 6):
        u = poisson_apply(engine, t, f)
        assert u.values.min() >= -1e-8 * top
        assert u.sup() <= f.sup() + 1e-8


def test_spatial_gradient_of_mode(line_engine, line):
    k = math.pi / line.half_width
    x = line.axis()
    gradient = spatial_gradient(line_engine, mode(line).values)
    assert gradient.shape == (1, 128)
    assert np.allclose(gradient[0], -k * np.sin(k * x), atol=1e-10)


def test_algebraic_heat_bound_holds(line_engine):
    report = check_kernel_bound(line_engine, [0.25, 1.0], KernelBoundParams(C=10.0))
    assert report.passed
    assert 0 < report.max_ratio < 1
    zero = check_kernel_bound(line_engine, [0.25], KernelBoundParams(C=10.0), amplitude=0.0)
    assert zero.max_ratio == 0.0


def test_kernel_bound_rejects_unresolved_times(line_engine):
    with pytest.raises(NumericalError, match="resolved range"):
        check_kernel_bound(line_engine, [1e-4], KernelBoundParams(C=10.0), kind=KernelKind.HEAT)


@pytest.mark.parametrize("kwargs", [
    dict(calculus=Calculus.POISSON),
    dict(order_m=0.0),
    dict(epsilon_list=(0.0,)),
])
def test_invalid_operator_specs(kwargs):
    with pytest.raises(EngineError):
        OperatorSpec.laplacian(**kwargs)


def test_schrodinger_potential_validation(line):
    with pytest.raises(EngineError, match="negative"):
        OperatorSpec.schrodinger(GridFunction.constant(line, -1.0))
    with pytest.raises(EngineError, match="vanishes"):
        OperatorSpec.schrodinger(GridFunction.zeros(line))
    with pytest.raises(EngineError, match="Fourier"):
        build_engine(OperatorSpec.schrodinger(GridFunction.constant(line, 1.0), route=Route.FOURIER), line)


def test_eigen_budget(monkeypatch, line, unit_potential):
    monkeypatch.setenv('CAMPANATO_MAX_EIGEN_POINTS', '64')
    with pytest.raises(EngineError, match="budget"):
        build_engine(OperatorSpec.schrodinger(unit_potential), line)
