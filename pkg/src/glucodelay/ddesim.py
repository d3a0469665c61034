"""Explicit integrators for the delay systems with interpolated history.

The first component is delayed.  Its stored values are interpolated with a
local barycentric Lagrange stencil so that Runge-Kutta stages at
``t + c h - tau`` see a value consistent with the scheme's order.  Steps are
capped at ``tau / 4``, so every delayed stage lies inside accepted history.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, IntegrationError, InterpolationError
from .model import ModelConfig, rhs_function

METHODS = ("rkf45", "rk4", "euler")


# -- interpolation ---------------------------------------------------------------


def barycentric_weights(ts) -> list[float]:
    n = len(ts)
    w = [1.0] * n
    for j in range(n):
        tj = ts[j]
        p = 1.0
        for k in range(n):
            if k != j:
                d = tj - ts[k]
                if d == 0.0:
                    raise InterpolationError(f"duplicate interpolation node t={tj!r}")
                p *= d
        w[j] = 1.0 / p
    return w


def barycentric_interpolate(ts, vs, t_query: float) -> float:
    """Value at ``t_query`` of the polynomial through (ts, vs), second barycentric form."""
    ts = [float(t) for t in ts]
    if not ts:
        raise InterpolationError("no interpolation nodes")
    lo, hi = min(ts), max(ts)
    if not (lo <= t_query <= hi):
        raise InterpolationError(f"query {t_query} outside node span [{lo}, {hi}]")
    w = barycentric_weights(ts)
    num = den = 0.0
    for tj, vj, wj in zip(ts, vs, w):
        d = t_query - tj
        if d == 0.0:
            return float(vj)
        c = wj / d
        num += c * vj
        den += c
    return num / den


def _stencil(ts, tq, size):
    """Index range [lo, hi) of ``size`` nodes centred on ``tq`` within ``ts``."""
    n = len(ts)
    j = bisect.bisect_right(ts, tq) - 1
    lo = j - (size - 1) // 2
    lo = max(0, min(lo, n - size))
    return lo, min(n, lo + size)


# -- initial data ----------------------------------------------------------------


@dataclass(frozen=True)
class ConstantHistory:
    value: float

    def __call__(self, s: float) -> float:
        return self.value


@dataclass(frozen=True)
class AffineHistory:
    """phi(s) = value + slope * s."""

    value: float
    slope: float

    def __call__(self, s: float) -> float:
        return self.value + self.slope * s


@dataclass(frozen=True)
class ExpHistory:
    """phi(s) = level + scale * exp(rate * s); with rate > 1/tau0 the cone growth condition holds."""

    level: float
    scale: float
    rate: float

    def __call__(self, s: float) -> float:
        return self.level + self.scale * math.exp(self.rate * s)


@dataclass(frozen=True)
class SampledHistory:
    """Tabulated history on [-tau, 0], interpolated with a local stencil."""

    ts: tuple[float, ...]
    vs: tuple[float, ...]
    order: int = 4

    def __post_init__(self):
        if len(self.ts) != len(self.vs) or len(self.ts) < 2:
            raise ConfigError("sampled history needs matching ts/vs with at least 2 points")
        if any(b <= a for a, b in zip(self.ts, self.ts[1:])):
            raise ConfigError("sampled history times must be strictly increasing")

    def __call__(self, s: float) -> float:
        lo, hi = _stencil(self.ts, s, self.order + 1)
        return barycentric_interpolate(self.ts[lo:hi], self.vs[lo:hi], s)


@dataclass(frozen=True)
class InitialData:
    """History ``phi`` of the delayed component on [-tau, 0] and the other component at 0."""

    phi: Callable[[float], float]
    g0: float

    @classmethod
    def constant(cls, i0: float, g0: float) -> InitialData:
        return cls(ConstantHistory(float(i0)), float(g0))


def check_initial_data(cfg: ModelConfig, init: InitialData, n: int = 65) -> None:
    vals = [init.phi(-cfg.tau * k / (n - 1)) for k in range(n)]
    if not all(math.isfinite(v) for v in vals) or not math.isfinite(init.g0):
        raise ConfigError("initial data must be finite on [-tau, 0]")
    if cfg.variant == "MS" and (min(vals) < 0 or not init.g0 > 0):
        raise ConfigError("MS initial data need phi >= 0 on [-tau, 0] and g0 > 0")


# -- options and results -----------------------------------------------------------


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "rkf45"
    t_end: float = 100.0
    dt: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    dt_min: float = 1e-12
    dt_max: float = math.inf
    dt0: float | None = None
    interpolation_order: int = 4
    safety: float = 0.9

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.method != "rkf45" and not (self.dt and self.dt > 0):
            raise ConfigError(f"{self.method} needs a positive dt")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("tolerances must be positive")
        if not (0 < self.dt_min <= self.dt_max):
            raise ConfigError("need 0 < dt_min <= dt_max")
        if self.interpolation_order < 1:
            raise ConfigError("interpolation_order must be at least 1")


@dataclass
class Trajectory:
    t: np.ndarray
    I: np.ndarray
    G: np.ndarray
    method: str
    tau: float
    interpolation_order: int
    init: InitialData
    accepted_steps: int = 0
    rejected_steps: int = 0
    reduced_order_lookups: int = 0
    #: columns t, dt, err, accepted, reduced_order
    step_log: np.ndarray = field(default_factory=lambda: np.zeros((0, 5)))

    def __len__(self):
        return len(self.t)

    def component(self, name: str) -> np.ndarray:
        if name not in ("I", "G"):
            raise ValueError(f"component must be 'I' or 'G', got {name!r}")
        return self.I if name == "I" else self.G

    def dense_eval(self, t_query: float, component: str = "I") -> float:
        """Interpolated value; exact at node times."""
        if not (self.t[0] <= t_query <= self.t[-1]):
            raise InterpolationError(f"t={t_query} outside [{self.t[0]}, {self.t[-1]}]")
        ts = self.t
        vs = self.component(component)
        n = len(ts)
        size = min(self.interpolation_order + 1, n)
        j = int(np.searchsorted(ts, t_query, side="right")) - 1
        lo = max(0, min(j - (size - 1) // 2, n - size))
        return barycentric_interpolate(ts[lo:lo + size], vs[lo:lo + size], t_query)

    def tail(self, fraction: float) -> slice:
        """Slice of nodes in the trailing ``fraction`` of the time window."""
        t0 = self.t[-1] - fraction * (self.t[-1] - self.t[0])
        return slice(int(np.searchsorted(self.t, t0)), None)


# -- history lookup ----------------------------------------------------------------


class _History:
    """Append-only store of accepted nodes with stencil lookup of the delayed component."""

    def __init__(self, phi, order, t0, i0, g0):
        self.phi = phi
        self.size = order + 1
        self.t = [t0]
        self.I = [i0]
        self.G = [g0]
        self.reduced = 0

    def lookup(self, tq):
        if tq <= 0.0:
            return self.phi(tq)
        ts = self.t
        n = len(ts)
        size = self.size
        if n < size:
            self.reduced += 1
            size = n
        j = bisect.bisect_right(ts, tq) - 1
        if j == n - 1 and tq > ts[-1]:
            raise IntegrationError(f"delayed argument {tq} beyond stored history end {ts[-1]}")
        lo = j - (size - 1) // 2
        if lo < 0:
            lo = 0
        elif lo > n - size:
            lo = n - size
        nodes = ts[lo:lo + size]
        vals = self.I[lo:lo + size]
        w = []
        for a, ta in enumerate(nodes):
            p = 1.0
            for b, tb in enumerate(nodes):
                if a != b:
                    p *= ta - tb
            w.append(1.0 / p)
        num = den = 0.0
        for ta, va, wa in zip(nodes, vals, w):
            d = tq - ta
            if d == 0.0:
                return va
            c = wa / d
            num += c * va
            den += c
        return num / den


def history_lookup(traj: Trajectory, init: InitialData, t_minus_tau: float) -> float:
    """Delayed value I(t - tau) from the initial function or the stored trajectory."""
    if t_minus_tau <= 0.0:
        return init.phi(t_minus_tau)
    if t_minus_tau > traj.t[-1]:
        raise InterpolationError(f"{t_minus_tau} lies beyond the stored history")
    return traj.dense_eval(t_minus_tau, "I")


# -- Fehlberg 4(5) tableau ---------------------------------------------------------

_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


def integrate(cfg: ModelConfig, init: InitialData | None = None,
              opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate ``cfg`` from ``init`` up to ``opts.t_end``."""
    opts = opts or IntegratorOptions()
    if init is None:
        raise ConfigError("initial data are required")
    check_initial_data(cfg, init)
    f = rhs_function(cfg)
    tau = cfg.tau
    h_cap = min(opts.dt_max, tau / 4.0)
    i0 = float(init.phi(0.0))
    hist = _History(init.phi, opts.interpolation_order, 0.0, i0, float(init.g0))
    log = []
    accepted = rejected = 0
    t, I, G = 0.0, i0, float(init.g0)
    t_end = float(opts.t_end)
    lookup = hist.lookup

    def finite_or_raise(t, *vals):
        for v in vals:
            if not math.isfinite(v):
                raise IntegrationError(f"non-finite state at t={t:.10g}")

    if opts.method in ("rk4", "euler"):
        dt = float(opts.dt)
        if dt > h_cap * (1 + 1e-12):
            raise ConfigError(f"dt={dt} exceeds the step cap tau/4 = {tau / 4}")
        n_steps = int(round(t_end / dt))
        if abs(n_steps * dt - t_end) > 1e-9 * t_end:
            n_steps = int(math.ceil(t_end / dt))
        euler = opts.method == "euler"

        def step(I, G, t, h):
            if euler:
                dI, dG = f(I, G, lookup(t - tau))
                return I + h * dI, G + h * dG
            k1I, k1G = f(I, G, lookup(t - tau))
            dm = lookup(t + 0.5 * h - tau)
            k2I, k2G = f(I + 0.5 * h * k1I, G + 0.5 * h * k1G, dm)
            k3I, k3G = f(I + 0.5 * h * k2I, G + 0.5 * h * k2G, dm)
            k4I, k4G = f(I + h * k3I, G + h * k3G, lookup(t + h - tau))
            return (I + h / 6.0 * (k1I + 2 * k2I + 2 * k3I + k4I),
                    G + h / 6.0 * (k1G + 2 * k2G + 2 * k3G + k4G))

        for i in range(n_steps):
            t = i * dt
            t_next = min((i + 1) * dt, t_end)
            h = t_next - t
            red0 = hist.reduced
            try:
                I, G = step(I, G, t, h)
            except (DomainError, OverflowError) as exc:
                raise IntegrationError(
                    f"state left the admissible domain at t={t:.10g}: {exc}") from None
            finite_or_raise(t_next, I, G)
            hist.t.append(t_next)
            hist.I.append(I)
            hist.G.append(G)
            accepted += 1
            log.append((t, h, 0.0, 1.0, float(hist.reduced > red0)))
    else:
        rtol, atol, safety = opts.rtol, opts.atol, opts.safety
        h = min(opts.dt0 or 1e-3 * tau, h_cap, t_end)
        while t < t_end:
            h = min(h, h_cap, t_end - t)
            if h < opts.dt_min:
                if t_end - t < opts.dt_min:
                    break
                raise IntegrationError(
                    f"step size {h:.3g} fell below dt_min={opts.dt_min:.3g} at t={t:.10g}")
            red0 = hist.reduced
            kI = [0.0] * 6
            kG = [0.0] * 6
            try:
                for s in range(6):
                    yi, yg = I, G
                    for j, a in enumerate(_A[s]):
                        yi += h * a * kI[j]
                        yg += h * a * kG[j]
                    kI[s], kG[s] = f(yi, yg, lookup(t + _C[s] * h - tau))
                I5 = I + h * sum(b * k for b, k in zip(_B5, kI))
                G5 = G + h * sum(b * k for b, k in zip(_B5, kG))
                eI = h * sum(e * k for e, k in zip(_E, kI))
                eG = h * sum(e * k for e, k in zip(_E, kG))
            except (DomainError, OverflowError):
                # a stage left the admissible domain: treat as a failed step
                I5 = G5 = math.nan
            if not (math.isfinite(I5) and math.isfinite(G5)):
                err = math.inf
            else:
                err = max(abs(eI) / (atol + rtol * max(abs(I), abs(I5))),
                          abs(eG) / (atol + rtol * max(abs(G), abs(G5))))
            if err <= 1.0:
                t = t + h if t_end - (t + h) > 1e-12 * t_end else t_end
                I, G = I5, G5
                hist.t.append(t)
                hist.I.append(I)
                hist.G.append(G)
                accepted += 1
                log.append((t - h, h, err, 1.0, float(hist.reduced > red0)))
            else:
                rejected += 1
                log.append((t, h, err, 0.0, float(hist.reduced > red0)))
            if err == 0.0:
                factor = 5.0
            elif math.isfinite(err):
                factor = min(5.0, max(0.2, safety * err ** -0.2))
            else:
                factor = 0.2
            h *= factor
        finite_or_raise(t, I, G)

    return Trajectory(
        t=np.array(hist.t), I=np.array(hist.I), G=np.array(hist.G), method=opts.method,
        tau=tau, interpolation_order=opts.interpolation_order, init=init,
        accepted_steps=accepted, rejected_steps=rejected,
        reduced_order_lookups=hist.reduced,
        step_log=np.array(log, dtype=float).reshape(-1, 5),
    )


@dataclass
class ConvergenceResult:
    method: str
    dts: list[float]
    errors_I: list[float]
    errors_G: list[float]
    order_I: float
    order_G: float


def fitted_order(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def self_convergence(cfg: ModelConfig, init: InitialData, dts, method: str = "rk4",
                     t_end: float = 20.0, interpolation_order: int = 4) -> ConvergenceResult:
    """L1 errors against a reference run at half the smallest step."""
    dts = [float(d) for d in dts]
    if len(dts) < 4:
        raise ValueError("self-convergence needs at least 4 step sizes")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must be strictly decreasing")
    if method not in ("rk4", "euler"):
        raise ValueError("self-convergence is defined for fixed-step methods")

    def run(dt):
        return integrate(cfg, init, IntegratorOptions(method=method, dt=dt, t_end=t_end,
                                                      interpolation_order=interpolation_order))

    ref = run(dts[-1] / 2.0)
    n = int(round(t_end / dts[0]))
    grid = np.linspace(0.0, t_end, n + 1)
    ref_I = np.array([ref.dense_eval(x, "I") for x in grid])
    ref_G = np.array([ref.dense_eval(x, "G") for x in grid])
    eI, eG = [], []
    for dt in dts:
        tr = run(dt)
        eI.append(float(np.mean(np.abs([tr.dense_eval(x, "I") for x in grid] - ref_I))))
        eG.append(float(np.mean(np.abs([tr.dense_eval(x, "G") for x in grid] - ref_G))))
    return ConvergenceResult(method, dts, eI, eG, fitted_order(dts, eI), fitted_order(dts, eG))
