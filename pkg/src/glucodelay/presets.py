"""Named model instances used by the tests, the CLI and the bundled ``configs/`` files.

None of the constants are physiological; they are chosen so that each instance
lands in a specific regime of the limiting map.
"""

from __future__ import annotations

from .functions import hill, hill_decreasing, make_f4_arctan, make_Fa, make_Fb
from .model import ModelConfig


def canonical(tau: float = 1.0) -> ModelConfig:
    """Saturating MS instance with a globally attracting equilibrium (regime A1)."""
    return ModelConfig(
        f1=hill(p=2.0, h=2.0, c=0.5),
        f2=hill(p=3.0, h=1.0),
        f4=make_f4_arctan(2.0, 1.0, 0.5),
        f5=hill_decreasing(p=4.0, h=1.0),
        tau0=1.0, g_in=1.0, q=1.0, tau=tau,
    )


def a2_hill(tau: float = 40.0) -> ModelConfig:
    """Steeper Hill exponents: the fixed point repels and a single 2-cycle attracts (regime A2)."""
    return ModelConfig(
        f1=hill(p=2.0, h=4.0, c=0.5),
        f2=hill(p=3.0, h=1.0),
        f4=make_f4_arctan(2.0, 1.0, 0.5),
        f5=hill_decreasing(p=4.0, h=4.0),
        tau0=1.0, g_in=1.0, q=1.0, tau=tau,
    )


def _msin(f5, tau):
    return ModelConfig(f4=make_f4_arctan(2.0, 1.0, 0.1), f5=f5, variant="MSin",
                       tau0=1.0, a1=1.0, a2=1.0, delta=0.1, B=1.0, tau=tau)


def msin_fa(tau: float = 5.0) -> ModelConfig:
    """Inner and outer attracting 2-cycles around a repelling zero (regime A3)."""
    return _msin(make_Fa(A=1.0, k=20.0, s=10.0), tau)


def msin_fb(tau: float = 5.0) -> ModelConfig:
    """Flat delayed feedback at zero: attracting equilibrium plus an outer cycle (regime A4)."""
    return _msin(make_Fb(A=2.0, B=1.0, k=10.0, n=1), tau)


PRESETS = {"canonical": canonical, "a2_hill": a2_hill, "msin_fa": msin_fa, "msin_fb": msin_fb}
