#!/usr/bin/env python3
"""Decay rates of the semigroup on the canonical Morrey function, and the long-time limit."""

import logging
from typing import Dict, List, Optional

import numpy as np
import pyarrow as pa

from core.corpus import morrey_singular
from core.grid import GridFunction, sample
from core.limits import (
    check_linfty_bound,
    check_weighted_difference,
    gap_decay_spread,
    kernel_membership,
    sigma_limit,
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


def process_lemma_checks(config: ExperimentConfig) -> SuiteResult:
    logger.info("Processing semigroup decay checks on Morrey data...")
    slope_tol = config.tolerance("slope", 0.10)
    spread_tol = config.tolerance("k_spread", 0.15)
    weighted_tol = config.tolerance("weighted_variation", 5.0)
    params = config.norms[0]
    domain = config.domain
    rows: List[Dict] = []

    with stage("lemma_checks:setup"):
        engine = config.build_engine()
        f = morrey_singular(domain, params.lam, params.p)
        family = config.build_family()

    with stage("lemma_checks:linfty"):
        linfty = check_linfty_bound(engine, f, params)
    rows.append(_row("linfty_slope_error", linfty.relative_slope_error, slope_tol))

    with stage("lemma_checks:gap_decay"):
        ks = [float(k) for k in config.option("ks", [2, 4, 16])]
        fits, spread = gap_decay_spread(engine, f, params, ks)
    for K, fit in fits.items():
        rows.append(_row(f"gap_decay_slope_error_k{K:g}", fit.relative_slope_error, slope_tol))
    rows.append(_row("gap_decay_k_spread", spread, spread_tol))

    with stage("lemma_checks:weighted_difference"):
        delta = float(config.option("delta", 1.0))
        m = engine.spec.order_m
        t_low = (4.0 * domain.spacing) ** m
        times = np.geomspace(t_low, 100.0 * t_low, int(config.option("weighted_points", 5)))
        ratios = [check_weighted_difference(engine, f, params, float(t), delta, family) for t in times]
    rows.append(_row("weighted_difference_variation", max(ratios) / min(ratios), weighted_tol))

    with stage("lemma_checks:eigenfunction_control"):
        R = domain.half_width
        mode = sample(domain, lambda x: np.cos(np.pi * x[0] / R))
        control = check_linfty_bound(engine, mode, params)
    rows.append(_row("eigenfunction_not_power_law", float(control.power_law), 0.0, not control.power_law))

    with stage("lemma_checks:limits"):
        t_list = [0.01, 0.1, 1.0, 10.0]
        one = kernel_membership(engine, GridFunction.constant(domain, 1.0), t_list)
        sigma = sigma_limit(engine, f, tol=config.tolerance("limit_tol", 1e-8))
        mean_gap = float(np.max(np.abs(sigma.limit.values - f.values.mean())))
    rows.append(_row("constant_is_fixed", one.max_deviation, 1e-8, one.member))
    limit_threshold = config.tolerance("limit_vs_mean", 1e-6) * f.sup()
    rows.append(_row("periodic_limit_is_mean", mean_gap, limit_threshold,
                     mean_gap <= limit_threshold if domain.is_periodic else True))

    summary = {
        "expected_slope": params.expected_slope(domain.dim),
        "linfty": linfty.to_record(),
        "gap_decay": {f"{K:g}": fit.to_record() for K, fit in fits.items()},
        "weighted_difference": {"times": times.tolist(), "ratios": ratios},
        "sigma_limit": sigma.to_record(),
    }
    checks = {row["check"]: row["passed"] for row in rows}
    logger.info(f"Sup-norm slope {linfty.slope:.4f} against expected {summary['expected_slope']:.4f}")
    return SuiteResult("lemma_checks", pa.Table.from_pylist(rows, schema=SCHEMA), summary, checks)
