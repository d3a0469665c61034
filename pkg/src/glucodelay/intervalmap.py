"""Limiting interval map Phi = F^-1 o H and its global structure.

For large delays the glucose component is slaved to the quasi-steady balance
``F(G_n) = H(G_{n-1})``.  ``Phi`` is strictly decreasing, so its dynamics
reduce to a fixed point (the equilibrium) and period-two cycles.  Mapping the
range of ``Phi`` forward produces nested intervals whose intersection either
collapses onto the fixed point or spans the outermost two-cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MapError
from .model import ModelConfig, solve_equilibrium, supply, supply_limits, uptake

REGIMES = ("A1", "A2", "A3", "A4", "indeterminate")


def big_F(cfg: ModelConfig, G: float) -> float:
    """Increasing side of the quasi-steady balance."""
    if G < cfg.g_lower:
        raise MapError(f"G={G} below the admissible range (lower end {cfg.g_lower})")
    return uptake(cfg, G)


def big_H(cfg: ModelConfig, G: float) -> float:
    """Decreasing side of the quasi-steady balance."""
    if G < cfg.g_lower:
        raise MapError(f"G={G} below the admissible range (lower end {cfg.g_lower})")
    return supply(cfg, G)


def _bisect_increasing(fun, target, lo, hi):
    """Bisect the increasing ``fun`` on [lo, hi] for ``fun(x) = target`` to full precision."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fun(mid) < target:
            lo = mid
        else:
            hi = mid
    return lo if abs(fun(lo) - target) <= abs(fun(hi) - target) else hi


def _bracket(fun, target, lower):
    """Bracket [lo, hi] with fun(lo) <= target <= fun(hi) by doubling outwards."""
    lo = lower if math.isfinite(lower) else -1.0
    hi = max(1.0, lo + 1.0)
    for _ in range(1100):
        if fun(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise MapError(f"F never reaches {target:.6g}; F must be unbounded above")
    if fun(lo) > target:
        if math.isfinite(lower):
            raise MapError(f"value {target:.6g} lies below F at the lower end {lower}")
        step = 1.0
        for _ in range(1100):
            hi, lo = lo, lo - step
            step *= 2.0
            if fun(lo) <= target:
                break
        else:
            raise MapError(f"F never falls below {target:.6g}")
    return lo, hi


def uptake_inverse(cfg: ModelConfig, value: float, tol: float = 1e-10) -> float:
    """Solve F(x) = value by bracketing and bisection."""
    if not math.isfinite(value):
        raise MapError(f"cannot invert F at non-finite value {value}")
    fun = lambda x: uptake(cfg, x)
    lo, hi = _bracket(fun, value, cfg.g_lower)
    x = _bisect_increasing(fun, value, lo, hi)
    if abs(fun(x) - value) > tol * (1.0 + abs(value)):
        raise MapError(f"F^-1({value:.6g}) did not converge (residual {fun(x) - value:.3g})")
    return x


def phi(cfg: ModelConfig, G: float, tol: float = 1e-10) -> float:
    """One step of the limiting map."""
    return uptake_inverse(cfg, big_H(cfg, G), tol)


def phi_limits(cfg: ModelConfig, tol: float = 1e-10) -> tuple[float, float]:
    """(Phi at the lower end of the range, Phi as G -> infinity)."""
    h_lo, h_inf = supply_limits(cfg)
    return uptake_inverse(cfg, h_lo, tol), uptake_inverse(cfg, h_inf, tol)


def phi_slope(cfg: ModelConfig, G: float, tol: float = 1e-10) -> float:
    """Central-difference derivative of Phi."""
    h = 1e-5 * max(1.0, abs(G))
    return (phi(cfg, G + h, tol) - phi(cfg, G - h, tol)) / (2.0 * h)


def iterate_phi(cfg: ModelConfig, G0: float, n: int, tol: float = 1e-10) -> list[float]:
    """Orbit G0, Phi(G0), ..., Phi^n(G0)."""
    orbit = [float(G0)]
    for _ in range(n):
        orbit.append(phi(cfg, orbit[-1], tol))
    return orbit


def iterate_difference_equation(cfg: ModelConfig, G0: float, steps: int,
                                tol: float = 1e-10) -> list[float]:
    """Solve the implicit balance F(G_s) = H(G_{s-1}) step by step by bisection."""
    out = [float(G0)]
    for _ in range(steps):
        prev = out[-1]
        residual = lambda g: uptake(cfg, g) - supply(cfg, prev)
        lo, hi = _bracket(residual, 0.0, cfg.g_lower)
        out.append(_bisect_increasing(residual, 0.0, lo, hi))
    return out


def classify_de_solution(orbit, eps: float = 1e-3) -> str:
    """Tail verdict ``periodic2``, ``stable`` or ``undecided``."""
    orbit = np.asarray(orbit, dtype=float)
    if orbit.size < 64:
        raise ValueError(f"orbit needs at least 64 points, got {orbit.size}")
    g0, g1, g2 = orbit[-3:]
    d1, d2 = abs(g1 - g0), abs(g2 - g0)
    if d2 < eps and d1 > eps:
        return "periodic2"
    if d2 < eps and d1 < eps:
        return "stable"
    return "undecided"


@dataclass(frozen=True)
class TwoCycle:
    gamma: float
    delta: float
    multiplier: float
    stability: str
    residual: float


@dataclass(frozen=True)
class PersistenceBounds:
    m_I: float
    M_I: float
    m_G: float
    M_G: float
    #: (c*, d*, alpha*, beta*) from the limiting interval
    refined: tuple[float, float, float, float] | None = None


@dataclass
class MapAnalysis:
    phi0: float
    phi_inf: float
    intervals: list[tuple[float, float]]
    l_star: tuple[float, float]
    fixed_point: float
    slope_at_fixed_point: float
    collapse_tol: float
    two_cycles: list[TwoCycle] = field(default_factory=list)
    regime: str = "indeterminate"

    @property
    def collapsed(self) -> bool:
        return self.l_star[1] - self.l_star[0] <= self.collapse_tol

    def summary(self) -> str:
        lines = [
            f"regime            {self.regime}",
            f"fixed point       {self.fixed_point:.12g}",
            f"slope at fixed pt {self.slope_at_fixed_point:.12g}",
            f"Phi_0, Phi_inf    {self.phi0:.12g}, {self.phi_inf:.12g}",
            f"L* (after {len(self.intervals)} intervals) "
            f"[{self.l_star[0]:.12g}, {self.l_star[1]:.12g}]",
        ]
        for c in self.two_cycles:
            lines.append(f"2-cycle           ({c.gamma:.12g}, {c.delta:.12g}) "
                         f"multiplier {c.multiplier:.6g} {c.stability} residual {c.residual:.3g}")
        return "\n".join(lines)


def imbedded_intervals(cfg: ModelConfig, n_max: int = 10000, collapse_tol: float = 1e-8,
                       tol: float = 1e-10) -> MapAnalysis:
    """Nested images L_{n+1} = Phi(L_n), starting from L_1 = [Phi_inf, Phi_0].

    Stops when the width falls below ``collapse_tol`` or the endpoints stop moving.
    Phi is decreasing, so Phi([a, b]) = [Phi(b), Phi(a)].
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    phi0, phi_inf = phi_limits(cfg, tol)
    fixed = solve_equilibrium(cfg).g_star
    intervals = [(phi_inf, phi0)]
    for _ in range(n_max - 1):
        a, b = intervals[-1]
        if b - a <= collapse_tol:
            break
        na, nb = phi(cfg, b, tol), phi(cfg, a, tol)
        # monotone images nest; clip round-off so the sequence stays nested
        na, nb = max(na, a), min(nb, b)
        intervals.append((na, nb))
        if abs(na - a) <= 1e-15 * (1 + abs(a)) and abs(nb - b) <= 1e-15 * (1 + abs(b)):
            break
    return MapAnalysis(
        phi0=phi0, phi_inf=phi_inf, intervals=intervals, l_star=intervals[-1],
        fixed_point=fixed, slope_at_fixed_point=phi_slope(cfg, fixed, tol),
        collapse_tol=collapse_tol,
    )


def _unit_band(tol):
    # central differences of Phi^2 resolve multipliers to roughly 1e-8
    return max(10.0 * tol, 1e-6)


def find_two_cycles(cfg: ModelConfig, grid: int = 2048, tol: float = 1e-10,
                    span: tuple[float, float] | None = None) -> list[TwoCycle]:
    """Period-two cycles (gamma < G* < delta) from sign changes of Phi^2(x) - x."""
    if grid < 100:
        raise ValueError("grid must be at least 100")
    if span is None:
        phi0, phi_inf = phi_limits(cfg, tol)
        span = (phi_inf, phi0)
    fixed = solve_equilibrium(cfg).g_star
    lo, hi = span[0], min(span[1], fixed)
    if not lo < hi:
        return []
    g = lambda x: phi(cfg, phi(cfg, x, tol), tol) - x
    xs = np.linspace(lo, hi, grid + 1)
    vals = [g(x) for x in xs]
    roots = []
    sep = 1e-7 * (1.0 + abs(fixed))
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(x0)
        elif np.sign(v0) * np.sign(v1) < 0:
            a, b, ga = x0, x1, v0
            while True:
                m = 0.5 * (a + b)
                if m <= a or m >= b:
                    break
                gm = g(m)
                if (gm < 0) == (ga < 0):
                    a, ga = m, gm
                else:
                    b = m
            roots.append(a if abs(ga) <= abs(g(b)) else b)
    cycles = []
    band = _unit_band(tol)
    for r in roots:
        if abs(r - fixed) <= sep:
            continue
        d = phi(cfg, r, tol)
        if d <= fixed + sep:
            continue
        residual = max(abs(phi(cfg, d, tol) - r), abs(phi(cfg, r, tol) - d))
        h = 1e-5 * max(1.0, abs(r))
        mult = (g(r + h) - g(r - h)) / (2.0 * h) + 1.0
        if abs(abs(mult) - 1.0) <= band:
            tag = "one-sided"
        elif abs(mult) < 1.0:
            tag = "attracting"
        else:
            tag = "repelling"
        cycles.append(TwoCycle(float(r), float(d), float(mult), tag, float(residual)))
    return cycles


def classify_regime(analysis: MapAnalysis, tol: float = 1e-10) -> str:
    """Regime label A1-A4 from the limiting interval, the cycles and the fixed-point slope."""
    if analysis.collapsed:
        return "A1"
    s = analysis.slope_at_fixed_point
    if abs(abs(s) - 1.0) <= _unit_band(tol):
        return "indeterminate"
    n = len(analysis.two_cycles)
    if s < -1.0:
        if n == 1 and analysis.two_cycles[0].stability == "attracting":
            return "A2"
        if n >= 2:
            return "A3"
    elif n >= 1:
        return "A4"
    return "indeterminate"


def persistence_bounds(cfg: ModelConfig, analysis: MapAnalysis | None = None) -> PersistenceBounds:
    """Eventual bounds on (I, G); refined bounds come from the limiting interval."""
    analysis = analysis or imbedded_intervals(cfg)
    m_G, M_G = analysis.phi_inf, analysis.phi0
    lo, hi = cfg.f1.limit_at_lower, cfg.f1.limit_at_infinity
    if not math.isfinite(lo):
        lo = cfg.f1(m_G)
    if not math.isfinite(hi):
        hi = cfg.f1(M_G)
    alpha, beta = analysis.l_star
    refined = (cfg.tau0 * cfg.f1(alpha), cfg.tau0 * cfg.f1(beta), alpha, beta)
    return PersistenceBounds(cfg.tau0 * lo, cfg.tau0 * hi, m_G, M_G, refined)


def brute_force_regime(cfg: ModelConfig, n_seeds: int = 50, steps: int = 2000,
                       seed: int = 0, tol: float = 1e-6) -> str:
    """Independent verdict: iterate Phi from random seeds and inspect where the orbits settle.

    Each orbit runs until its even subsequence stops moving or ``steps`` is reached.
    Returns ``fixed`` if every orbit settles on the fixed point, ``cycle`` if every
    orbit ends on a two-cycle, ``mixed`` otherwise.
    """
    phi0, phi_inf = phi_limits(cfg)
    fixed = solve_equilibrium(cfg).g_star
    rng = np.random.default_rng(seed)
    kinds = set()
    for x0 in rng.uniform(phi_inf, phi0, n_seeds):
        a, b = x0, phi(cfg, x0)
        for _ in range(steps // 2):
            c = phi(cfg, b)
            d = phi(cfg, c)
            settled = abs(c - a) < 1e-13 and abs(d - b) < 1e-13
            a, b = c, d
            if settled:
                break
        kinds.add("fixed" if abs(a - fixed) < tol and abs(b - fixed) < tol else "cycle")
    return kinds.pop() if len(kinds) == 1 else "mixed"


def analyze_map(cfg: ModelConfig, n_max: int = 10000, collapse_tol: float = 1e-8,
                grid: int = 2048, tol: float = 1e-10) -> MapAnalysis:
    """Full pipeline: intervals, cycles, regime."""
    analysis = imbedded_intervals(cfg, n_max, collapse_tol, tol)
    analysis.two_cycles = find_two_cycles(cfg, grid, tol, span=(analysis.phi_inf, analysis.phi0))
    analysis.regime = classify_regime(analysis, tol)
    return analysis
