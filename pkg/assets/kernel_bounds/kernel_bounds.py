#!/usr/bin/env python3
"""Heat and Poisson kernel diagnostics: Gaussian exactness, Poisson shape, bounds, semigroup identities."""

import logging
from typing import Dict, List, Optional

import numpy as np
import pyarrow as pa

from core.corpus import generate_corpus
from core.grid import GridFunction
from core.spectral import (
    KernelBoundParams,
    KernelKind,
    OperatorEngine,
    OperatorKind,
    check_domination,
    check_kernel_bound,
    distance_to,
    fit_poisson_constant,
    gaussian_reference,
    heat_apply,
    kernel_column,
    poisson_apply,
    poisson_via_subordination,
)
from utils.config import ExperimentConfig
from utils.suite import SuiteResult, stage

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SCHEMA = pa.schema([
    pa.field("check", pa.string(), nullable=False),
    pa.field("value", pa.float64(), nullable=False),
    pa.field("threshold", pa.float64(), nullable=False),
    pa.field("passed", pa.bool_(), nullable=False),
])


def _row(check: str, value: float, threshold: float, passed: Optional[bool] = None) -> Dict:
    return {"check": check, "value": float(value), "threshold": float(threshold),
            "passed": bool(value <= threshold) if passed is None else bool(passed)}


def gaussian_exactness(engine: OperatorEngine, t_list, radius_fraction: float = 1.0 / 16) -> float:
    """max relative deviation of p_t(., 0) from the Gaussian within radius_fraction * R of the pole."""
    domain = engine.domain
    y = domain.origin_index
    near = distance_to(domain, y) <= radius_fraction * domain.half_width
    worst = 0.0
    for t in t_list:
        column = kernel_column(engine, t, y).values
        reference = gaussian_reference(domain, t, y)
        worst = max(worst, float(np.max(np.abs(column[near] - reference[near]) / reference[near])))
    return worst


def symmetry_defect(engine: OperatorEngine, t: float, kind: KernelKind = KernelKind.HEAT) -> float:
    """|p_t(x, y) - p_t(y, x)| for two distinct nodes, relative to the diagonal value."""
    domain = engine.domain
    x = domain.origin_index
    y = domain.snap([0.25 * domain.half_width] + [0.0] * (domain.dim - 1))
    column_x = kernel_column(engine, t, x, kind).values
    column_y = kernel_column(engine, t, y, kind).values
    return abs(column_x[tuple(y)] - column_y[tuple(x)]) / abs(column_x[tuple(x)])


def semigroup_law_defect(engine: OperatorEngine, functions: List[GridFunction], s: float, t: float) -> Dict[str, float]:
    """Worst relative defect of the composition and commutation identities over ``functions``."""
    poisson = engine.with_calculus(engine.spec.as_poisson())
    defects = {"heat_composition": 0.0, "poisson_composition": 0.0, "commutation": 0.0}
    for f in functions:
        scale = max(f.sup(), np.finfo(float).tiny)
        heat_st = heat_apply(engine, s, heat_apply(engine, t, f)).values
        defects["heat_composition"] = max(defects["heat_composition"],
                                          float(np.max(np.abs(heat_st - heat_apply(engine, s + t, f).values))) / scale)
        poisson_st = poisson_apply(poisson, s, poisson_apply(poisson, t, f)).values
        defects["poisson_composition"] = max(defects["poisson_composition"],
                                             float(np.max(np.abs(poisson_st - poisson_apply(poisson, s + t, f).values))) / scale)
        hp = heat_apply(engine, s, poisson_apply(poisson, t, f)).values
        ph = poisson_apply(poisson, t, heat_apply(engine, s, f)).values
        defects["commutation"] = max(defects["commutation"], float(np.max(np.abs(hp - ph))) / scale)
    return defects


def process_kernel_bounds(config: ExperimentConfig) -> SuiteResult:
    logger.info("Processing kernel diagnostics...")
    domain = config.domain
    h, R = domain.spacing, domain.half_width
    rows: List[Dict] = []

    with stage("kernel_bounds:engines"):
        engine = config.build_engine()
        poisson = engine.with_calculus(engine.spec.as_poisson())
    heat_times = list(np.geomspace(4.0 * h * h, (R / 4.0) ** 2, int(config.option("heat_times", 7))))
    poisson_times = list(np.geomspace(4.0 * h, R / 16.0, int(config.option("poisson_times", 4))))
    summary: Dict = {"operator": engine.spec.kind.value, "route": engine.route.value}

    free = engine.spec.kind is OperatorKind.LAPLACIAN and engine.is_fourier
    if free:
        with stage("kernel_bounds:gaussian"):
            exact_times = [t for t in heat_times if t >= (4.0 * h) ** 2]
            error = gaussian_exactness(engine, exact_times, float(config.option("gaussian_radius_fraction", 1.0 / 16)))
        rows.append(_row("gaussian_relative_error", error, config.tolerance("gaussian", 1e-6)))

        with stage("kernel_bounds:poisson_shape"):
            fits = [fit_poisson_constant(poisson, t, domain.origin_index) for t in poisson_times]
            fine_engine = config.build_engine(domain.refined(2)).with_calculus(engine.spec.as_poisson())
            fine_fit = fit_poisson_constant(fine_engine, poisson_times[0], fine_engine.domain.origin_index)
        c_n = fits[0].constant
        summary["poisson_constant"] = c_n
        rows.append(_row("poisson_shape_relative_error", max(fit.max_relative_error for fit in fits),
                         config.tolerance("poisson_shape", 1e-3)))
        rows.append(_row("poisson_constant_grid_drift", abs(fine_fit.constant / c_n - 1.0),
                         config.tolerance("poisson_constant_drift", 0.01)))

        with stage("kernel_bounds:poisson_diagonal"):
            diagonal = check_kernel_bound(poisson, poisson_times, KernelBoundParams(c_n, 1.0), kind=KernelKind.POISSON,
                                          shape='poisson')
        deviation = max(abs(r - 1.0) for r in diagonal.diagonal_ratios)
        rows.append(_row("poisson_diagonal_ratio_deviation", deviation, config.tolerance("poisson_diagonal", 0.02)))

        with stage("kernel_bounds:poisson_derivatives"):
            for derivative in ('time', 'space'):
                report = check_kernel_bound(poisson, poisson_times, KernelBoundParams(1.0, 1.0), kind=KernelKind.POISSON,
                                            shape='poisson', derivative=derivative)
                rows.append(_row(f"poisson_{derivative}_derivative_ratio", report.max_ratio, 1.0))

    with stage("kernel_bounds:algebraic"):
        C = float(config.option("bound_constant", 10.0))
        epsilon = float(config.operator.epsilon_list[0])
        report = check_kernel_bound(engine, heat_times, KernelBoundParams(C, 2.0, epsilon))
        zero = check_kernel_bound(engine, heat_times[:1], KernelBoundParams(C, 2.0, epsilon), amplitude=0.0)
    summary["algebraic_bound"] = report.to_record()
    rows.append(_row("heat_algebraic_bound_ratio", report.max_ratio, 1.0))
    rows.append(_row("zero_kernel_ratio", zero.max_ratio, 0.0))

    with stage("kernel_bounds:symmetry"):
        t_mid = float(np.sqrt(heat_times[0] * heat_times[-1]))
        symmetry = max(symmetry_defect(engine, t_mid), symmetry_defect(poisson, float(np.sqrt(R * h)), KernelKind.POISSON))
    rows.append(_row("kernel_symmetry_defect", symmetry, config.tolerance("symmetry", 1e-10)))

    functions = [item.f for item in generate_corpus(config.corpus or ("trig:20",), domain, config.seed)]
    with stage("kernel_bounds:semigroup_law", {"functions": len(functions)}):
        defects = semigroup_law_defect(engine, functions, s=0.5, t=0.25)
    for name, value in defects.items():
        rows.append(_row(f"{name}_defect", value, config.tolerance("semigroup_law", 1e-10)))

    with stage("kernel_bounds:subordination"):
        t_sub = R / 8.0
        nodes = int(config.option("subordination_nodes", 200))
        gap = 0.0
        for f in functions[:5]:
            oracle = poisson_via_subordination(engine, t_sub, f, nodes)
            gap = max(gap, float(np.max(np.abs(oracle.values - poisson_apply(poisson, t_sub, f).values))))
    rows.append(_row("subordination_gap", gap, config.tolerance("subordination", 1e-4)))

    with stage("kernel_bounds:contraction"):
        excess = 0.0
        for f in functions:
            for t in heat_times:
                excess = max(excess, heat_apply(engine, t, f).sup() - f.sup())
    rows.append(_row("linfty_contraction_excess", excess, 1e-8))

    if engine.spec.kind is OperatorKind.SCHRODINGER:
        with stage("kernel_bounds:domination"):
            domination = check_domination(engine, heat_times)
            columns = [kernel_column(engine, t, domain.origin_index).values for t in heat_times]
            negativity = max(float(-np.min(column)) / float(np.max(column)) for column in columns)
        rows.append(_row("domination_excess", domination, 1e-8))
        rows.append(_row("heat_kernel_negativity", negativity, 1e-8))

    checks = {row["check"]: row["passed"] for row in rows}
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning(f"Kernel checks failed: {failed}")
    return SuiteResult("kernel_bounds", pa.Table.from_pylist(rows, schema=SCHEMA), summary, checks)
