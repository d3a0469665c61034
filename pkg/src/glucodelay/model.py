"""System instances, the positive equilibrium, zero translation and linearization.

Four variants share one interface:

``MS``    I' = f1(G) - I/tau0
          G' = G_in - f2(G) - q G f4(I) + f5(I(t - tau))
``MS0``   the same system in deviation variables x = I - I*, y = G - G*
``MSs``   x' = -x/tau0 + a1 y,  y' = -a2 y - a4 x + F(x(t - tau))
``MSin``  x' = -x/tau0 + a1 y,  y' = -a2 y - f4(x) y - delta B arctan(x) + F(x(t - tau))

Throughout, ``I`` names the first (insulin-like) component and ``G`` the
second (glucose-like) component, whichever variant is in use.  For the
non-MS variants ``f5`` holds the delayed nonlinearity ``F``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .errors import ConfigError, LinearizationError, ModelError
from .functions import FunctionSpec, affine, constant, shifted, validate_hypotheses

VARIANTS = ("MS", "MS0", "MSs", "MSin")


@dataclass(frozen=True)
class ModelConfig:
    f1: FunctionSpec | None = None
    f2: FunctionSpec | None = None
    f4: FunctionSpec | None = None
    f5: FunctionSpec | None = None
    tau0: float = 1.0
    g_in: float = 1.0
    q: float = 1.0
    tau: float = 1.0
    variant: str = "MS"
    a1: float = 1.0
    a2: float = 1.0
    a4: float = 0.0
    delta: float = 0.0
    B: float = 1.0
    #: (I*, G*) of the MS system an MS0 config was translated from
    origin: tuple[float, float] | None = None
    check: bool = dataclasses.field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not (self.tau0 > 0 and self.tau > 0):
            raise ConfigError(f"tau0 and tau must be positive (tau0={self.tau0}, tau={self.tau})")
        if self.f5 is None:
            raise ConfigError("f5 (the delayed nonlinearity) is required")
        if self.variant in ("MSs", "MSin"):
            object.__setattr__(self, "f1", affine(self.a1))
            object.__setattr__(self, "f2", affine(self.a2))
            if self.variant == "MSs":
                object.__setattr__(self, "f4", constant(self.a4))
            elif self.f4 is None:
                raise ConfigError("MSin needs f4")
            if not (self.a1 > 0 and self.a2 > 0):
                raise ConfigError("a1 and a2 must be positive")
        elif None in (self.f1, self.f2, self.f4):
            raise ConfigError(f"{self.variant} needs f1, f2, f4 and f5")
        if self.variant == "MS":
            if not (self.g_in > 0 and self.q > 0):
                raise ConfigError(f"G_in and q must be positive (G_in={self.g_in}, q={self.q})")
            if self.check:
                report = validate_hypotheses(self.f1, self.f2, self.f4, self.f5)
                if not report.all_pass:
                    raise ConfigError(f"hypotheses (H1)-(H5) fail:\n{report}")
        if self.variant == "MS0" and self.origin is None:
            raise ConfigError("MS0 configs carry the origin (I*, G*) they were translated from")

    def replace(self, **changes) -> ModelConfig:
        return dataclasses.replace(self, **changes)

    @property
    def g_lower(self) -> float:
        """Left end of the admissible range of the G component."""
        if self.variant == "MS":
            return 0.0
        if self.variant == "MS0":
            return -self.origin[1]
        return -math.inf


@dataclass(frozen=True)
class Equilibrium:
    g_star: float
    i_star: float
    residual: float


@dataclass(frozen=True)
class LinearCoeffs:
    """Coefficients of (lambda+mu1)(lambda+mu2) + b + a exp(-tau lambda) = 0."""

    mu1: float
    mu2: float
    a: float
    b: float
    tau: float

    def with_tau(self, tau: float) -> LinearCoeffs:
        return dataclasses.replace(self, tau=tau)


# -- quasi-steady decomposition ------------------------------------------------
#
# Setting I' = 0 gives I as a function of G; setting G' = 0 then splits the
# glucose balance into an increasing "uptake" part F(G) and a decreasing
# "supply" part H(G_delayed).


def insulin_of(cfg: ModelConfig, G: float) -> float:
    """Insulin level on the I-nullcline at glucose level ``G``."""
    if cfg.variant in ("MS", "MS0"):
        return cfg.tau0 * cfg.f1(G)
    return cfg.tau0 * cfg.a1 * G


def _f4_at_origin(cfg):
    return cfg.f4.base.fast(cfg.f4.params["shift"])


def uptake(cfg: ModelConfig, G: float) -> float:
    """Increasing left-hand side F of the quasi-steady glucose balance."""
    v = cfg.variant
    x = insulin_of(cfg, G)
    if v == "MS":
        return cfg.f2(G) + cfg.q * G * cfg.f4(x)
    if v == "MS0":
        F4 = cfg.f4(x)
        return cfg.f2(G) + cfg.q * (F4 + _f4_at_origin(cfg)) * G + cfg.q * cfg.origin[1] * F4
    if v == "MSs":
        return cfg.a2 * G + cfg.a4 * x
    return cfg.a2 * G + cfg.f4(x) * G + cfg.delta * cfg.B * math.atan(x)


def supply(cfg: ModelConfig, G: float) -> float:
    """Decreasing right-hand side H of the quasi-steady glucose balance."""
    base = cfg.g_in if cfg.variant == "MS" else 0.0
    return base + cfg.f5(insulin_of(cfg, G))


def _f5_at(cfg, x):
    if math.isinf(x):
        return cfg.f5.limit_at_infinity if x > 0 else cfg.f5.limit_at_lower
    return cfg.f5(x)


def supply_limits(cfg: ModelConfig) -> tuple[float, float]:
    """(H at the left end of the G range, H as G -> infinity)."""
    base = cfg.g_in if cfg.variant == "MS" else 0.0
    if cfg.variant in ("MS", "MS0"):
        lo = cfg.tau0 * cfg.f1.limit_at_lower
        hi = cfg.tau0 * cfg.f1.limit_at_infinity
    else:
        lo, hi = -math.inf, math.inf
    return base + _f5_at(cfg, lo), base + _f5_at(cfg, hi)


def equilibrium_residual(cfg: ModelConfig, G: float) -> float:
    """F(G) - H(G); strictly increasing, zero exactly at the equilibrium."""
    return uptake(cfg, G) - supply(cfg, G)


def solve_equilibrium(cfg: ModelConfig, tol: float = 1e-10) -> Equilibrium:
    """Unique equilibrium; bisection from a bracket grown by doubling.

    Translated variants have the zero equilibrium by construction.
    Bisection always runs to full double precision; ``tol`` is the largest
    residual accepted.
    """
    if cfg.variant != "MS":
        return Equilibrium(0.0, 0.0, abs(equilibrium_residual(cfg, 0.0)))
    lo, hi = 0.0, 1.0
    r_lo = equilibrium_residual(cfg, lo)
    if r_lo >= 0:
        raise ModelError(f"residual at G=0 is {r_lo:.6g} >= 0; hypotheses violated")
    for _ in range(60):
        if equilibrium_residual(cfg, hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ModelError("no sign change of the equilibrium residual within 60 doublings")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if equilibrium_residual(cfg, mid) > 0:
            hi = mid
        else:
            lo = mid
    g = lo if abs(equilibrium_residual(cfg, lo)) <= abs(equilibrium_residual(cfg, hi)) else hi
    res = abs(equilibrium_residual(cfg, g))
    if res > tol * max(1.0, abs(supply(cfg, g))):
        raise ModelError(f"equilibrium residual {res:.3g} exceeds tolerance {tol:.3g}")
    return Equilibrium(g, cfg.tau0 * cfg.f1(g), res)


def translate_to_zero(cfg: ModelConfig, eq: Equilibrium | None = None) -> ModelConfig:
    """Shift an MS config so that its equilibrium sits at the origin."""
    if cfg.variant != "MS":
        raise ConfigError(f"only MS configs can be translated, got {cfg.variant}")
    eq = eq or solve_equilibrium(cfg)
    return ModelConfig(
        f1=shifted(cfg.f1, eq.g_star),
        f2=shifted(cfg.f2, eq.g_star),
        f4=shifted(cfg.f4, eq.i_star),
        f5=shifted(cfg.f5, eq.i_star),
        tau0=cfg.tau0, g_in=cfg.g_in, q=cfg.q, tau=cfg.tau,
        variant="MS0", origin=(eq.i_star, eq.g_star),
    )


def _smooth(spec, u, label):
    if not spec.is_smooth_at(u):
        raise LinearizationError(
            f"{label} is not differentiable at {u:.6g}; change the parameters so the "
            "equilibrium avoids the junction")
    return spec.derivative(u)


def linearize(cfg: ModelConfig, eq: Equilibrium | None = None) -> LinearCoeffs:
    """Coefficients of the characteristic equation at the equilibrium."""
    eq = eq or solve_equilibrium(cfg)
    g, i = eq.g_star, eq.i_star
    v = cfg.variant
    mu1 = 1.0 / cfg.tau0
    if v in ("MS", "MS0"):
        d1 = _smooth(cfg.f1, g, "f1")
        d2 = _smooth(cfg.f2, g, "f2")
        d4 = _smooth(cfg.f4, i, "f4")
        d5 = _smooth(cfg.f5, i, "f5")
        if v == "MS":
            f4_level, g_level = cfg.f4(i), g
        else:
            f4_level, g_level = _f4_at_origin(cfg), cfg.origin[1]
        mu2 = d2 + cfg.q * f4_level
        b = cfg.q * g_level * d1 * d4
        a = -d1 * d5
    else:
        d5 = _smooth(cfg.f5, 0.0, "F5")
        a = -cfg.a1 * d5
        if v == "MSs":
            mu2, b = cfg.a2, cfg.a1 * cfg.a4
        else:
            _smooth(cfg.f4, 0.0, "f4")
            mu2 = cfg.a2 + cfg.f4(0.0)
            b = cfg.a1 * cfg.delta * cfg.B
    coeffs = LinearCoeffs(mu1, mu2, a, b, cfg.tau)
    if not (mu2 > 0 and b >= 0 and a >= 0) or (v == "MS" and not a > 0):
        raise ModelError(f"linearization violates the sign contract: {coeffs}")
    return coeffs


def rhs_function(cfg: ModelConfig):
    """Fast closure ``(I, G, I_delayed) -> (I', G')`` for the integrator."""
    v = cfg.variant
    tau0 = cfg.tau0
    f5 = cfg.f5.fast
    if v == "MS":
        f1, f2, f4 = cfg.f1.fast, cfg.f2.fast, cfg.f4.fast
        g_in, q = cfg.g_in, cfg.q

        def rhs(I, G, Id):
            return f1(G) - I / tau0, g_in - f2(G) - q * G * f4(I) + f5(Id)
    elif v == "MS0":
        F1, F2, F4 = cfg.f1.fast, cfg.f2.fast, cfg.f4.fast
        q, g_star, f4s = cfg.q, cfg.origin[1], _f4_at_origin(cfg)

        def rhs(I, G, Id):
            F4x = F4(I)
            return (F1(G) - I / tau0,
                    -F2(G) - q * (F4x + f4s) * G - q * g_star * F4x + f5(Id))
    elif v == "MSs":
        a1, a2, a4 = cfg.a1, cfg.a2, cfg.a4

        def rhs(I, G, Id):
            return -I / tau0 + a1 * G, -a2 * G - a4 * I + f5(Id)
    else:
        a1, a2, dB = cfg.a1, cfg.a2, cfg.delta * cfg.B
        f4 = cfg.f4.fast
        atan = math.atan

        def rhs(I, G, Id):
            return -I / tau0 + a1 * G, -a2 * G - f4(I) * G - dB * atan(I) + f5(Id)
    return rhs


def rhs(cfg: ModelConfig, I: float, G: float, I_delayed: float) -> tuple[float, float]:
    """Right-hand side (I', G') of the selected variant."""
    if cfg.variant == "MS" and (I < 0 or G < 0 or I_delayed < 0):
        raise ConfigError("MS states must be non-negative")
    return rhs_function(cfg)(float(I), float(G), float(I_delayed))
