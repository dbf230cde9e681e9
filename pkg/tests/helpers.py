from pathlib import Path

import numpy as np

from core.grid import sample

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"


def mode(domain, k=1):
    R = domain.half_width
    return sample(domain, lambda x: np.cos(np.pi * k * x[0] / R))


def bump(domain, width=1.0):
    return sample(domain, lambda x: np.exp(-np.sum(x ** 2, axis=0) / (2.0 * width * width)))
