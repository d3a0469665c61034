"""Seeded generator of randomized Hill-type MS configs shared by several tests."""

import numpy as np

from glucodelay.functions import hill, hill_decreasing, make_f4_arctan
from glucodelay.model import ModelConfig


def random_hill_configs(n: int, seed: int = 20260):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(ModelConfig(
            f1=hill(p=rng.uniform(1, 3), h=rng.uniform(1, 6), c=rng.uniform(0.2, 1)),
            f2=hill(p=rng.uniform(1, 4), h=1),
            f4=make_f4_arctan(2, 1, rng.uniform(0.1, 1)),
            f5=hill_decreasing(p=rng.uniform(1, 5), h=rng.uniform(1, 6)),
            g_in=rng.uniform(0.5, 2),
        ))
    return out
