#!/usr/bin/env python3
"""Single-purpose runs behind the engine-build, norm, semigroup and limits subcommands."""

import logging
from typing import Dict, List

import numpy as np
import pyarrow as pa

from core.corpus import generate_corpus
from core.limits import kernel_membership, sigma_limit
from core.norms import NormParams, norm_table
from core.spectral import generator_spectrum, semigroup_stack, spectral_gap
from utils.config import ExperimentConfig
from utils.environment import is_engine_cache_enabled
from utils.suite import SuiteResult, map_rows, stage

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def process_engine_build(config: ExperimentConfig) -> SuiteResult:
    """Build (and cache) the engine; the table lists the lowest generator eigenvalues."""
    logger.info("Building operator engine...")
    with stage("engine_build"):
        engine = config.build_engine()
    spectrum = np.sort(generator_spectrum(engine))[: int(config.option("spectrum_rows", 256))]
    table = pa.table({"index": pa.array(np.arange(len(spectrum)), pa.int64()),
                      "eigenvalue": pa.array(spectrum, pa.float64())})
    summary = {
        "route": engine.route.value,
        "size": config.domain.size,
        "spectral_gap": spectral_gap(engine),
        "potential_floor": engine.potential_floor,
        "cache_enabled": is_engine_cache_enabled(),
    }
    logger.info(f"Engine on {config.domain.shape} via {engine.route.value}, gap {summary['spectral_gap']:.6g}")
    return SuiteResult("engine_build", table, summary, {"engine_built": True})


def process_norm(config: ExperimentConfig) -> SuiteResult:
    """Every norm of every corpus function, one row per (function, p, lambda)."""
    logger.info("Evaluating norms over the corpus...")
    engine = config.build_engine()
    family = config.build_family()
    betas = config.operator.theta_policy
    rows: List[Dict] = []
    for params in config.norms:
        operator_params = NormParams(params.p, params.lam, engine.spec.order_m)
        corpus = generate_corpus(config.corpus, config.domain, config.seed, params.lam, params.p)
        with stage(f"norm:p{params.p:g}_lam{params.lam:g}"):
            tables = map_rows(lambda item: norm_table(item.f, engine, operator_params, family, betas), corpus)
        for item, values in zip(corpus, tables):
            rows.append({"name": item.name, "p": params.p, "lam": params.lam, **values})
    return SuiteResult("norm", pa.Table.from_pylist(rows), {"rows": len(rows)}, {})


def process_semigroup(config: ExperimentConfig) -> SuiteResult:
    """sup|S_t f| and sup|S_t f - f| on a time grid, plot-ready."""
    logger.info("Sampling semigroup trajectories...")
    engine = config.build_engine()
    times = [float(t) for t in config.option("t_list", [0.01, 0.1, 1.0, 10.0])]
    corpus = generate_corpus(config.corpus, config.domain, config.seed)
    rows: List[Dict] = []
    with stage("semigroup", {"times": len(times)}):
        for item in corpus:
            stack = semigroup_stack(engine, item.f, times)
            for t, values in zip(times, stack):
                rows.append({
                    "name": item.name,
                    "t": t,
                    "sup": float(np.max(np.abs(values))),
                    "deviation": float(np.max(np.abs(values - item.f.values))),
                })
    return SuiteResult("semigroup", pa.Table.from_pylist(rows), {"rows": len(rows), "times": times}, {})


def process_limits(config: ExperimentConfig) -> SuiteResult:
    """sigma_L(f) and kernel-space membership for every corpus function."""
    logger.info("Computing long-time limits...")
    engine = config.build_engine()
    tol = config.tolerance("limit_tol", 1e-8)
    t_list = [float(t) for t in config.option("t_list", [0.01, 0.1, 1.0, 10.0])]
    corpus = generate_corpus(config.corpus, config.domain, config.seed)

    def evaluate(item) -> Dict:
        limit = sigma_limit(engine, item.f, tol=tol)
        membership = kernel_membership(engine, item.f, t_list, config.tolerance("membership", 1e-8))
        return {
            "name": item.name,
            "sup_f": item.f.sup(),
            "sigma_sup": limit.limit_sup,
            "converged": limit.converged,
            "final_deviation": limit.sup_deviations[-1],
            "member": membership.member,
            "membership_deviation": membership.max_deviation,
        }

    with stage("limits"):
        rows = map_rows(evaluate, corpus)
    checks = {"limits_converged": all(r["converged"] for r in rows)}
    return SuiteResult("limits", pa.Table.from_pylist(rows), {"rows": len(rows)}, checks)
