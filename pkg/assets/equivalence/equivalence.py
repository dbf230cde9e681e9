#!/usr/bin/env python3
"""Two-sided comparison of the semigroup Campanato seminorm with the Morrey norm of f - sigma(f)."""

import logging
import math
from typing import Dict, List, Tuple

import pyarrow as pa

from core.corpus import CorpusItem, generate_corpus
from core.grid import BallFamily, GridDomain
from core.limits import sigma_limit
from core.norms import NormParams, campanato_classical, campanato_operator, is_degenerate, morrey_norm, mtype_norm
from core.spectral import OperatorEngine
from utils.config import ExperimentConfig
from utils.suite import SuiteResult, map_rows, stage

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def _schema(betas) -> pa.Schema:
    fields = [
        pa.field("name", pa.string(), nullable=False),
        pa.field("sup_f", pa.float64(), nullable=False),
        pa.field("morrey", pa.float64(), nullable=False),
        pa.field("morrey_minus_sigma", pa.float64(), nullable=False),
        pa.field("campanato_operator", pa.float64(), nullable=False),
        pa.field("campanato_sqrt", pa.float64(), nullable=False),
        pa.field("campanato_classical", pa.float64(), nullable=False),
        pa.field("ratio", pa.float64(), nullable=True),
        pa.field("sigma_sup", pa.float64(), nullable=False),
        pa.field("sigma_converged", pa.bool_(), nullable=False),
    ]
    fields += [pa.field(f"mtype_beta_{beta:g}", pa.float64(), nullable=False) for beta in betas]
    return pa.schema(fields)


def evaluate_row(item: CorpusItem, engine: OperatorEngine, sqrt_engine: OperatorEngine, params: NormParams,
                 family: BallFamily, limit_tol: float, betas) -> Dict:
    f = item.f
    sigma = sigma_limit(engine, f, tol=limit_tol)
    remainder = f - sigma.limit
    heat_params = NormParams(params.p, params.lam, engine.spec.order_m)
    sqrt_params = NormParams(params.p, params.lam, 1.0)

    morrey_remainder = morrey_norm(remainder, params, family).value
    operator = campanato_operator(f, engine, heat_params, family).value
    row = {
        "name": item.name,
        "sup_f": f.sup(),
        "morrey": morrey_norm(f, params, family).value,
        "morrey_minus_sigma": morrey_remainder,
        "campanato_operator": operator,
        "campanato_sqrt": campanato_operator(f, sqrt_engine, sqrt_params, family).value,
        "campanato_classical": campanato_classical(f, params, family).value,
        "ratio": None if is_degenerate(morrey_remainder, f) else operator / morrey_remainder,
        "sigma_sup": sigma.limit_sup,
        "sigma_converged": sigma.converged,
    }
    for beta in betas:
        row[f"mtype_beta_{beta:g}"] = mtype_norm(f, params.p, beta)
    return row


def c_star(rows: List[Dict]) -> Tuple[float, float, float]:
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None and r["ratio"] > 0]
    if not ratios:
        return math.nan, math.nan, math.nan
    lo, hi = min(ratios), max(ratios)
    return lo, hi, math.sqrt(hi / lo)


def run_corpus(config: ExperimentConfig, domain: GridDomain, family: BallFamily) -> List[Dict]:
    params = config.norms[0]
    engine = config.build_engine(domain)
    sqrt_engine = engine.with_calculus(engine.spec.as_poisson())
    corpus = generate_corpus(config.corpus, domain, config.seed, params.lam, params.p)
    limit_tol = config.tolerance("limit_tol", 1e-8)
    betas = config.operator.theta_policy
    return map_rows(lambda item: evaluate_row(item, engine, sqrt_engine, params, family, limit_tol, betas), corpus)


def process_equivalence(config: ExperimentConfig) -> SuiteResult:
    logger.info("Processing semigroup Campanato vs Morrey equivalence...")
    sigma_tol = config.tolerance("sigma_relative", 1e-6)
    drift_tol = config.tolerance("c_star_drift", 0.20)

    with stage("equivalence:corpus"):
        rows = run_corpus(config, config.domain, config.build_family())
    lo, hi, star = c_star(rows)

    sigma_ok = all(r["sigma_sup"] <= sigma_tol * r["sup_f"] for r in rows)

    summary = {"min_ratio": lo, "max_ratio": hi, "c_star": star, "rows": len(rows)}
    checks = {"sigma_vanishes": sigma_ok, "c_star_finite": math.isfinite(star) and star >= 1.0}

    if config.option("drift", True):
        with stage("equivalence:grid_doubling"):
            fine = config.domain.refined(2)
            _, _, star_fine = c_star(run_corpus(config, fine, config.build_family(fine)))
        with stage("equivalence:family_refinement"):
            _, _, star_refined = c_star(run_corpus(config, config.domain, config.build_family().refined(1)))
        summary["refinement_drift"] = {
            "grid_doubling": abs(star_fine / star - 1.0),
            "family_refinement": abs(star_refined / star - 1.0),
        }
        checks["c_star_stable_grid"] = summary["refinement_drift"]["grid_doubling"] <= drift_tol
        checks["c_star_stable_family"] = summary["refinement_drift"]["family_refinement"] <= drift_tol

    logger.info(f"C* = {star:.4g} over {len(rows)} functions (ratios in [{lo:.4g}, {hi:.4g}])")
    table = pa.Table.from_pylist(rows, schema=_schema(config.operator.theta_policy))
    return SuiteResult("equivalence", table, summary, checks)
