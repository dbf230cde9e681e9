#!/usr/bin/env python3
"""Reverse-Hölder certification of the builtin potentials under grid refinement."""

import logging
from typing import Dict, List, Optional

import pyarrow as pa

from core.grid import BallFamily
from core.potentials import BqCertificate, PotentialKind, PotentialSpec, certify_bq, reverse_holder_constant, sample_potential
from utils.config import ExperimentConfig
from utils.suite import SuiteResult, map_rows, stage

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SCHEMA = pa.schema([
    pa.field("potential", pa.string(), nullable=False),
    pa.field("q", pa.float64(), nullable=False),
    pa.field("constant", pa.float64(), nullable=False),
    pa.field("levels", pa.string(), nullable=False),
    pa.field("skipped_balls", pa.int64(), nullable=False),
    pa.field("q_ge_half_n", pa.bool_(), nullable=False),
    pa.field("q_ge_n", pa.bool_(), nullable=False),
    pa.field("verdict", pa.string(), nullable=False),
    pa.field("expected_verdict", pa.string(), nullable=True),
    pa.field("passed", pa.bool_(), nullable=False),
])

# name, spec, expected verdict
BUILTIN_POTENTIALS = [
    ("constant", PotentialSpec(PotentialKind.CONSTANT, 1.0), "certified"),
    ("power_law_2", PotentialSpec(PotentialKind.POWER_LAW, 1.0, 2.0), "certified"),
    ("half_space_indicator", PotentialSpec(PotentialKind.INDICATOR, 1.0), "diverging"),
]


def certificate_row(name: str, certificate: BqCertificate, expected: Optional[str]) -> Dict:
    return {
        "potential": name,
        "q": certificate.q,
        "constant": certificate.constant,
        "levels": ";".join(f"{v:.17g}" for v in certificate.levels),
        "skipped_balls": certificate.skipped_balls,
        "q_ge_half_n": certificate.hypothesis_met["q_ge_half_n"],
        "q_ge_n": certificate.hypothesis_met["q_ge_n"],
        "verdict": certificate.verdict,
        "expected_verdict": expected,
        "passed": expected is None or certificate.verdict == expected,
    }


def q_monotone(spec: PotentialSpec, qs: List[float], family: BallFamily) -> bool:
    """The reverse-Hölder constant cannot decrease in q (Hölder on each ball)."""
    V = sample_potential(spec, family.domain)
    constants = [reverse_holder_constant(V, q, family).constant for q in sorted(qs)]
    return all(b >= a * (1 - 1e-12) for a, b in zip(constants, constants[1:]))


def process_rh_certify(config: ExperimentConfig) -> SuiteResult:
    logger.info("Processing reverse-Hölder certification...")
    budget = int(config.option("rh_budget", 5))
    family = config.build_family()
    q = float(config.option("q", config.q))

    candidates = list(BUILTIN_POTENTIALS)
    if config.potential is not None:
        candidates.append(("configured", config.potential, config.option("expected_verdict")))

    with stage("rh_certify:levels", {"budget": budget, "q": q}):
        certificates = map_rows(lambda c: certify_bq(c[1], q, family, budget), candidates)
    rows = [certificate_row(name, certificate, expected)
            for (name, _, expected), certificate in zip(candidates, certificates)]

    checks = {f"{row['potential']}_verdict": row["passed"] for row in rows}
    constant_certificate = certificates[0]
    checks["constant_potential_is_one"] = abs(constant_certificate.levels[0] - 1.0) <= 1e-12

    with stage("rh_certify:invariances"):
        power_law = BUILTIN_POTENTIALS[1][1]
        V = sample_potential(power_law, family.domain)
        base = reverse_holder_constant(V, q, family).constant
        scaled = reverse_holder_constant(V * 7.5, q, family).constant
        monotone = q_monotone(power_law, [1.5, 2.0, 4.0, 8.0], family)
    checks["scale_invariant"] = abs(scaled / base - 1.0) <= 1e-12
    checks["monotone_in_q"] = monotone

    summary = {"q": q, "budget": budget, "certificates": {name: c.to_record()
                                                          for (name, _, _), c in zip(candidates, certificates)}}
    logger.info(f"B_{q:g} verdicts: {[(row['potential'], row['verdict']) for row in rows]}")
    return SuiteResult("rh_certify", pa.Table.from_pylist(rows, schema=SCHEMA), summary, checks)
