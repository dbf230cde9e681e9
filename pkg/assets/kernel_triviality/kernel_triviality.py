#!/usr/bin/env python3
"""No nonzero function is fixed by the heat or Poisson semigroup of -Delta + V."""

import logging
from typing import Dict

import numpy as np
import pyarrow as pa

from core.corpus import CorpusItem, generate_corpus
from core.limits import check_heat_decay_bound, kernel_membership
from core.spectral import OperatorEngine, check_domination, semigroup_stack
from utils.config import ExperimentConfig
from utils.suite import SuiteResult, map_rows, stage

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SCHEMA = pa.schema([
    pa.field("name", pa.string(), nullable=False),
    pa.field("sup_f", pa.float64(), nullable=False),
    pa.field("heat_member", pa.bool_(), nullable=False),
    pa.field("heat_deviation", pa.float64(), nullable=False),
    pa.field("heat_deviation_t1", pa.float64(), nullable=False),
    pa.field("poisson_member", pa.bool_(), nullable=False),
    pa.field("poisson_deviation", pa.float64(), nullable=False),
    pa.field("poisson_deviation_t1", pa.float64(), nullable=False),
    pa.field("decay_excess", pa.float64(), nullable=False),
    pa.field("passed", pa.bool_(), nullable=False),
])


def _deviation_at(engine: OperatorEngine, f, t: float) -> float:
    return float(np.max(np.abs(semigroup_stack(engine, f, [t])[0] - f.values)))


def evaluate_row(item: CorpusItem, heat: OperatorEngine, poisson: OperatorEngine, t_list, t_grid,
                 tol: float, deviation_floor: float) -> Dict:
    f = item.f
    heat_result = kernel_membership(heat, f, t_list, tol)
    poisson_result = kernel_membership(poisson, f, t_list, tol)
    heat_t1 = _deviation_at(heat, f, 1.0)
    poisson_t1 = _deviation_at(poisson, f, 1.0)
    excess = check_heat_decay_bound(heat, f, t_grid)
    sup = f.sup()
    passed = (not heat_result.member and not poisson_result.member
              and heat_t1 >= deviation_floor * sup and poisson_t1 >= deviation_floor * sup
              and excess <= 0.0)
    return {
        "name": item.name,
        "sup_f": sup,
        "heat_member": heat_result.member,
        "heat_deviation": heat_result.max_deviation,
        "heat_deviation_t1": heat_t1,
        "poisson_member": poisson_result.member,
        "poisson_deviation": poisson_result.max_deviation,
        "poisson_deviation_t1": poisson_t1,
        "decay_excess": excess,
        "passed": passed,
    }


def process_kernel_triviality(config: ExperimentConfig) -> SuiteResult:
    logger.info("Processing semigroup kernel triviality...")
    tol = config.tolerance("membership", 1e-8)
    deviation_floor = config.tolerance("deviation_floor", 1e-3)
    t_list = [float(t) for t in config.option("t_list", [0.01, 0.1, 1.0, 10.0])]
    t_grid = [float(t) for t in config.option("t_grid", list(np.geomspace(0.01, 100.0, 9)))]

    with stage("kernel_triviality:engines"):
        heat = config.build_engine()
        poisson = heat.with_calculus(heat.spec.as_poisson())

    params = config.norms[0]
    corpus = [item for item in generate_corpus(config.corpus, config.domain, config.seed, params.lam, params.p)
              if item.f.sup() > 0]
    with stage("kernel_triviality:corpus"):
        rows = map_rows(lambda item: evaluate_row(item, heat, poisson, t_list, t_grid, tol, deviation_floor), corpus)

    checks = {"no_fixed_points": all(r["passed"] for r in rows)}
    summary = {"rows": len(rows), "potential_floor": heat.potential_floor}
    if heat.spec.potential is not None:
        with stage("kernel_triviality:domination"):
            bound_times = [t for t in t_list if t >= 4.0 * config.domain.spacing ** 2]
            excess = check_domination(heat, bound_times)
        summary["domination_excess"] = excess
        checks["dominated_by_free_kernel"] = excess <= 1e-8

    failed = [r["name"] for r in rows if not r["passed"]]
    if failed:
        logger.warning(f"Functions failing the triviality checks: {failed}")
    return SuiteResult("kernel_triviality", pa.Table.from_pylist(rows, schema=SCHEMA), summary, checks)
