"""Scalar nonlinearities for the glucose-insulin delay model.

Every nonlinearity is a :class:`FunctionSpec`: an immutable family tag plus
named real parameters.  Evaluation dispatches on the family, so specs pickle
cleanly and can be shipped to worker processes during sweeps.

Families
--------
``arctan``           eps * (A + B * arctan(u))                (real line)
``fa``               odd, piecewise: -arctan(s x) on [0, M], -x on [M, pi/2],
                     -pi/2 - A arctan(k (x - pi/2)) beyond     (real line)
``fb``               odd, piecewise: -B x^(2n+1) on [0, 1],
                     -B - A arctan(k (x - 1)) beyond           (real line)
``affine``           c + m * u                                 (real line)
``constant``         c                                         (real line)
``hill``             c + p u^h / (K^h + u^h)                   (u >= 0)
``hill_decreasing``  c + p K^h / (K^h + u^h)                   (u >= 0)
``shifted``          base(u + shift) - base(shift)             (translated)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, DomainError

HALF_PI = 0.5 * math.pi

#: Parameter names accepted by each family, with defaults (None = required).
PARAMETERS: dict[str, dict[str, float | None]] = {
    "arctan": {"eps": None, "A": None, "B": None},
    "fa": {"A": 1.0, "k": 10.0, "s": 1.0},
    "fb": {"A": 1.0, "B": 1.0, "k": 10.0, "n": 1},
    "affine": {"c": 0.0, "m": None},
    "constant": {"c": None},
    "hill": {"p": None, "h": None, "K": 1.0, "c": 0.0},
    "hill_decreasing": {"p": None, "h": None, "K": 1.0, "c": 0.0},
    "shifted": {"shift": None},
}


def _hill_ratio(u, K, h):
    try:
        return (u / K) ** h
    except OverflowError:
        return math.inf


def fa_inner_junction(s):
    """Positive root M of ``arctan(s M) = M``; zero when ``s <= 1``."""
    if s <= 1.0:
        return 0.0
    # atan(s x) - x is concave, positive just right of 0, negative at pi/2
    lo, hi = 1e-300, HALF_PI
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return lo
        if math.atan(s * mid) > mid:
            lo = mid
        else:
            hi = mid


def _make_fa(p):
    A, k, s = p["A"], p["k"], p["s"]
    M = fa_inner_junction(s)

    def mag(ax):
        if ax <= M:
            return math.atan(s * ax)
        if ax <= HALF_PI:
            return ax
        return HALF_PI + A * math.atan(k * (ax - HALF_PI))

    def slope(ax, closed_above):
        # closed_above selects the branch to the left of a junction for x >= 0
        inner = ax <= M if closed_above else ax < M
        middle = ax <= HALF_PI if closed_above else ax < HALF_PI
        if inner:
            return s / (1.0 + (s * ax) ** 2)
        if middle:
            return 1.0
        z = k * (ax - HALF_PI)
        return A * k / (1.0 + z * z)

    def value(x):
        v = mag(abs(x))
        return -v if x >= 0.0 else v

    def deriv(x):
        return -slope(abs(x), x >= 0.0)

    return value, deriv


def _make_fb(p):
    A, B, k, n = p["A"], p["B"], p["k"], int(p["n"])
    e = 2 * n + 1

    def mag(ax):
        if ax <= 1.0:
            return B * ax**e
        return B + A * math.atan(k * (ax - 1.0))

    def slope(ax, closed_above):
        if ax < 1.0 or (closed_above and ax == 1.0):
            return e * B * ax ** (e - 1)
        z = k * (ax - 1.0)
        return A * k / (1.0 + z * z)

    def value(x):
        v = mag(abs(x))
        return -v if x >= 0.0 else v

    def deriv(x):
        return -slope(abs(x), x >= 0.0)

    return value, deriv


def _make_hill(p, decreasing):
    P, h, K, c = p["p"], p["h"], p["K"], p["c"]

    def value(u):
        if u < 0.0:
            raise DomainError(f"hill: argument {u!r} is negative")
        r = _hill_ratio(u, K, h)
        if math.isinf(r):
            return c if decreasing else c + P
        return c + (P / (1.0 + r) if decreasing else P * r / (1.0 + r))

    def deriv(u):
        if u == 0.0:
            if h == 1.0:
                d = P / K
            elif h > 1.0:
                d = 0.0
            else:
                d = math.inf
        else:
            r = _hill_ratio(u, K, h)
            if math.isinf(r):
                d = 0.0
            else:
                d = P * h * r / (u * (1.0 + r) ** 2)
        return -d if decreasing else d

    return value, deriv


@dataclass(frozen=True)
class FunctionSpec:
    """One scalar nonlinearity.

    ``monotone``, the limits and the domain are derived from the family and
    its parameters rather than stored, so they can never disagree with the
    formula that is actually evaluated.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    base: FunctionSpec | None = None

    def __post_init__(self):
        if self.kind not in PARAMETERS:
            raise ConfigError(f"unknown function kind {self.kind!r}")
        allowed = PARAMETERS[self.kind]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ConfigError(f"{self.kind}: unknown parameter(s) {sorted(unknown)}")
        full = {}
        for name, default in allowed.items():
            if name in self.params:
                full[name] = float(self.params[name])
            elif default is None:
                raise ConfigError(f"{self.kind}: missing parameter {name!r}")
            else:
                full[name] = float(default)
        object.__setattr__(self, "params", full)
        if (self.kind == "shifted") != (self.base is not None):
            raise ConfigError("a base function is required exactly for kind 'shifted'")

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items())), self.base))

    def __getstate__(self):
        # drop cached closures so specs pickle
        return {k: v for k, v in self.__dict__.items() if k in ("kind", "params", "base")}

    def __setstate__(self, state):
        self.__dict__.update(state)

    @cached_property
    def _impl(self) -> tuple[Callable[[float], float], Callable[[float], float]]:
        p = self.params
        kind = self.kind
        if kind == "arctan":
            eps, A, B = p["eps"], p["A"], p["B"]
            return (lambda u: eps * (A + B * math.atan(u)),
                    lambda u: eps * B / (1.0 + u * u))
        if kind == "fa":
            return _make_fa(p)
        if kind == "fb":
            return _make_fb(p)
        if kind == "affine":
            c, m = p["c"], p["m"]
            return (lambda u: c + m * u), (lambda u: m)
        if kind == "constant":
            c = p["c"]
            return (lambda u: c), (lambda u: 0.0)
        if kind in ("hill", "hill_decreasing"):
            return _make_hill(p, kind == "hill_decreasing")
        # shifted
        bv, bd = self.base._impl
        s = p["shift"]
        b0 = bv(s)
        return (lambda u: bv(u + s) - b0), (lambda u: bd(u + s))

    # -- evaluation -------------------------------------------------------

    @property
    def fast(self) -> Callable[[float], float]:
        """Unchecked value function, for inner loops that already respect the domain."""
        return self._impl[0]

    @property
    def fast_derivative(self) -> Callable[[float], float]:
        return self._impl[1]

    def _check(self, u):
        if math.isnan(u) or u < self.domain_lower:
            raise DomainError(f"{self.kind}: argument {u!r} outside domain "
                              f"[{self.domain_lower}, inf)")

    def __call__(self, u: float) -> float:
        u = float(u)
        self._check(u)
        return self._impl[0](u)

    def derivative(self, u: float) -> float:
        """Analytic derivative; at a junction, the derivative of the branch to the left."""
        u = float(u)
        self._check(u)
        return self._impl[1](u)

    # -- derived properties -----------------------------------------------

    @property
    def domain_lower(self) -> float:
        if self.kind in ("hill", "hill_decreasing"):
            return 0.0
        if self.kind == "shifted":
            return self.base.domain_lower - self.params["shift"]
        return -math.inf

    @property
    def junctions(self) -> tuple[float, ...]:
        """Points where the function is continuous but not differentiable."""
        p = self.params
        if self.kind == "fa":
            M = fa_inner_junction(p["s"])
            pts = [HALF_PI] + ([M] if M > 0.0 else [])
            return tuple(sorted([-x for x in pts] + pts))
        if self.kind == "fb":
            if (2 * p["n"] + 1) * p["B"] == p["A"] * p["k"]:
                return ()
            return (-1.0, 1.0)
        if self.kind == "shifted":
            return tuple(x - p["shift"] for x in self.base.junctions)
        return ()

    def is_smooth_at(self, u: float, tol: float = 1e-12) -> bool:
        return all(abs(u - j) > tol * (1.0 + abs(j)) for j in self.junctions)

    @property
    def monotone(self) -> str:
        """``'increasing'``, ``'decreasing'`` or ``'constant'``."""
        p = self.params
        kind = self.kind
        if kind == "arctan":
            s = p["eps"] * p["B"]
        elif kind in ("fa", "fb"):
            s = -1.0
        elif kind == "affine":
            s = p["m"]
        elif kind == "constant":
            s = 0.0
        elif kind == "hill":
            s = p["p"]
        elif kind == "hill_decreasing":
            s = -p["p"]
        else:
            return self.base.monotone
        return "increasing" if s > 0 else "decreasing" if s < 0 else "constant"

    @property
    def limit_at_zero(self) -> float:
        return self._impl[0](0.0) if self.domain_lower <= 0.0 else math.nan

    @property
    def limit_at_infinity(self) -> float:
        return self._limit(+1)

    @property
    def limit_at_lower(self) -> float:
        """Value at the left end of the domain (0 for one-sided families, -inf otherwise)."""
        if math.isfinite(self.domain_lower):
            return self._impl[0](self.domain_lower)
        return self._limit(-1)

    def _limit(self, sign):
        p = self.params
        kind = self.kind
        if kind == "arctan":
            return p["eps"] * (p["A"] + sign * p["B"] * HALF_PI)
        if kind == "fa":
            return -sign * HALF_PI * (1.0 + p["A"])
        if kind == "fb":
            return -sign * (p["B"] + p["A"] * HALF_PI)
        if kind == "affine":
            m = p["m"] * sign
            return p["c"] if m == 0 else math.copysign(math.inf, m)
        if kind == "constant":
            return p["c"]
        if kind == "hill":
            return p["c"] + p["p"]
        if kind == "hill_decreasing":
            return p["c"]
        return self.base._limit(sign) - self.base._impl[0](p["shift"])


# -- constructors -----------------------------------------------------------


def make_function(kind: str, **params) -> FunctionSpec:
    """Build a spec by family name, routing to the range-checked constructors."""
    if kind == "fa":
        return make_Fa(**params)
    if kind == "fb":
        return make_Fb(**params)
    return FunctionSpec(kind, params)


def make_Fa(A: float = 1.0, k: float = 10.0, s: float = 1.0) -> FunctionSpec:
    """Odd, continuous, strictly decreasing multi-stability nonlinearity.

    ``s`` is the slope of the inner ``-arctan(s x)`` branch, which runs up to
    the positive root ``M`` of ``arctan(s M) = M``.  With ``s <= 1`` the root
    is ``M = 0`` and the function is ``-x`` on the whole of ``[0, pi/2]``.
    """
    if not A > 0:
        raise ConfigError(f"fa: A must be positive, got {A}")
    if not k > 1:
        raise ConfigError(f"fa: k must exceed 1, got {k}")
    if not s > 0:
        raise ConfigError(f"fa: s must be positive, got {s}")
    return FunctionSpec("fa", {"A": A, "k": k, "s": s})


def make_Fb(A: float = 1.0, B: float = 1.0, k: float = 10.0, n: int = 1) -> FunctionSpec:
    """Odd, decreasing nonlinearity with a flat (slope 0) origin when ``n >= 1``."""
    if not (A > 0 and B > 0):
        raise ConfigError(f"fb: A and B must be positive, got A={A}, B={B}")
    if not k > 1:
        raise ConfigError(f"fb: k must exceed 1, got {k}")
    if int(n) != n or n < 0:
        raise ConfigError(f"fb: n must be a non-negative integer, got {n}")
    return FunctionSpec("fb", {"A": A, "B": B, "k": k, "n": int(n)})


def make_f4_arctan(A: float, B: float, eps: float) -> FunctionSpec:
    """Increasing, positive ``eps * (A + B arctan u)``; requires ``A > pi B / 2``."""
    if not (B > 0 and eps > 0):
        raise ConfigError(f"arctan: B and eps must be positive, got B={B}, eps={eps}")
    if not A > HALF_PI * B:
        raise ConfigError(f"arctan: need A > pi/2 * B for positivity, got A={A}, B={B}")
    return FunctionSpec("arctan", {"eps": eps, "A": A, "B": B})


def hill(p, h, K=1.0, c=0.0) -> FunctionSpec:
    return FunctionSpec("hill", {"p": p, "h": h, "K": K, "c": c})


def hill_decreasing(p, h, K=1.0, c=0.0) -> FunctionSpec:
    return FunctionSpec("hill_decreasing", {"p": p, "h": h, "K": K, "c": c})


def affine(m, c=0.0) -> FunctionSpec:
    return FunctionSpec("affine", {"m": m, "c": c})


def constant(c) -> FunctionSpec:
    return FunctionSpec("constant", {"c": c})


def shifted(base: FunctionSpec, shift: float) -> FunctionSpec:
    """``u -> base(u + shift) - base(shift)``, vanishing at the origin."""
    return FunctionSpec("shifted", {"shift": shift}, base=base)


# -- hypothesis validation ----------------------------------------------------


@dataclass(frozen=True)
class HypothesisCheck:
    hypothesis: str
    passed: bool
    witness: float | None = None
    message: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[HypothesisCheck, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f" at u={c.witness:.6g}: {c.message}" if not c.passed else ""
            lines.append(f"{c.hypothesis}: {status}{extra}")
        return "\n".join(lines)


def _saturated(spec, u):
    lim = spec.limit_at_infinity
    return math.isfinite(lim) and abs(spec.fast(u) - lim) <= 1e-12 * (1.0 + abs(lim))


def _check_shape(name, spec, grid, sign, zero_value, limit_rule):
    """First violation of positivity, derivative sign, value at 0, or limit."""
    if spec.domain_lower > 0:
        return HypothesisCheck(name, False, 0.0, "not defined at u = 0")
    v0 = spec.fast(0.0)
    ok, msg = zero_value(v0)
    if not ok:
        return HypothesisCheck(name, False, 0.0, msg)
    for u in grid:
        v = spec.fast(u)
        if not v > 0:
            return HypothesisCheck(name, False, float(u), f"value {v:.6g} is not positive")
        d = spec.fast_derivative(u)
        if not (d * sign > 0 or (d == 0.0 and _saturated(spec, u))):
            return HypothesisCheck(name, False, float(u), f"derivative {d:.6g} has the wrong sign")
    lim = spec.limit_at_infinity
    ok, msg = limit_rule(lim)
    if not ok:
        return HypothesisCheck(name, False, math.inf, msg)
    far = spec.fast(float(grid[-1]))
    if abs(far - lim) > 1e-3 * (1.0 + abs(lim)):
        return HypothesisCheck(name, False, float(grid[-1]),
                               f"sampled value {far:.6g} far from declared limit {lim:.6g}")
    return HypothesisCheck(name, True)


def validate_hypotheses(f1: FunctionSpec, f2: FunctionSpec, f4: FunctionSpec,
                        f5: FunctionSpec, n: int = 200, lo: float = 1e-6,
                        hi: float = 1e6) -> HypothesisReport:
    """Sample the four nonlinearities on a log grid and test (H1)-(H5).

    Failures are returned as data with the first witness point.  A zero
    derivative is tolerated only where the function has numerically reached
    its limit (floating-point saturation, not a flat region).
    """
    grid = np.logspace(math.log10(lo), math.log10(hi), n)
    checks = []

    h1 = HypothesisCheck("H1", True)
    for label, spec in (("f1", f1), ("f2", f2), ("f4", f4), ("f5", f5)):
        if spec.domain_lower > 0:
            h1 = HypothesisCheck("H1", False, 0.0, f"{label} undefined at 0")
            break
        for u in [0.0, *grid]:
            v, d = spec.fast(u), spec.fast_derivative(u)
            if not (math.isfinite(v) and v >= 0):
                h1 = HypothesisCheck("H1", False, float(u), f"{label} = {v:.6g} is negative or not finite")
                break
            if not math.isfinite(d) and u > 0:
                h1 = HypothesisCheck("H1", False, float(u), f"{label}' is not finite")
                break
        if not h1.passed:
            break
    checks.append(h1)

    def positive_at_zero(label):
        return lambda v: (v > 0, f"{label}(0) = {v:.6g} must be positive")

    def positive_limit(label):
        return lambda lim: (math.isfinite(lim) and lim > 0, f"lim {label} = {lim:.6g} must be finite and positive")

    checks.append(_check_shape("H2", f1, grid, +1, positive_at_zero("f1"), positive_limit("f1")))
    checks.append(_check_shape("H3", f2, grid, +1,
                               lambda v: (abs(v) <= 1e-14, f"f2(0) = {v:.6g} must vanish"),
                               positive_limit("f2")))
    checks.append(_check_shape("H4", f4, grid, +1, positive_at_zero("f4"), positive_limit("f4")))
    checks.append(_check_shape("H5", f5, grid, -1, positive_at_zero("f5"),
                               lambda lim: (lim == 0.0, f"lim f5 = {lim:.6g} must be 0")))
    return HypothesisReport(tuple(checks))
