"""Roots of the quasi-polynomial (lambda+mu1)(lambda+mu2) + b + a exp(-tau lambda).

Real coefficients put the roots in conjugate pairs.  Non-real roots sit in
bands ``Im lambda in (2k pi/tau, (2k+1) pi/tau)`` (and their mirror images),
one pair per band; the pair in the fundamental strip ``(0, pi/tau)``
has the largest real part and decides oscillatory instability.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import LinearCoeffs


def char_value(coeffs: LinearCoeffs, lam: complex) -> complex:
    c = coeffs
    try:
        e = cmath.exp(-c.tau * lam)
    except OverflowError:
        return complex(math.inf, 0.0)
    return (lam + c.mu1) * (lam + c.mu2) + c.b + c.a * e


def char_derivative(coeffs: LinearCoeffs, lam: complex) -> complex:
    c = coeffs
    try:
        e = cmath.exp(-c.tau * lam)
    except OverflowError:
        return complex(math.inf, 0.0)
    return 2.0 * lam + c.mu1 + c.mu2 - c.a * c.tau * e


def residual_ok(coeffs: LinearCoeffs, lam: complex, rtol: float = 1e-9) -> bool:
    return abs(char_value(coeffs, lam)) <= rtol * (1.0 + abs(lam) ** 2)


def search_radius(coeffs: LinearCoeffs, tol: float = 1e-12) -> float:
    """Half-width of the real search window.

    For lambda > 10 max(mu1+mu2, 1) the quadratic exceeds a + b, and the
    exponential term is below ``tol`` once lambda > ln(1 + a/tol)/tau.
    """
    c = coeffs
    return 10.0 * max(c.mu1 + c.mu2, 1.0) + math.log1p(c.a / tol) / c.tau


def _real_g(c, x):
    if c.a == 0.0:
        e = 0.0
    else:
        with np.errstate(over="ignore"):
            e = c.a * np.exp(-c.tau * x)
    return (x + c.mu1) * (x + c.mu2) + c.b + e


def find_real_roots(coeffs: LinearCoeffs, window: tuple[float, float] | None = None,
                    grid: int = 20000) -> list[float]:
    """Real roots bracketed by a sign scan on ``window`` and refined by bisection."""
    if window is None:
        lam = search_radius(coeffs)
        window = (-lam, lam)
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    xs = np.linspace(lo, hi, grid + 1)
    vals = _real_g(coeffs, xs)
    g = lambda x: float(_real_g(coeffs, x))
    roots = []
    for i in range(grid):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            roots.append(float(xs[i]))
            continue
        if not np.sign(v0) * np.sign(v1) < 0:
            continue
        a, b, ga = float(xs[i]), float(xs[i + 1]), v0
        while True:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            gm = g(m)
            if (gm < 0) == (ga < 0):
                a, ga = m, gm
            else:
                b = m
        roots.append(a if abs(g(a)) <= abs(g(b)) else b)
    return roots


def _newton(coeffs, lam, maxiter=100):
    """Damped complex Newton; returns the root or None."""
    f = char_value(coeffs, lam)
    for _ in range(maxiter):
        d = char_derivative(coeffs, lam)
        if d == 0 or not cmath.isfinite(d) or not cmath.isfinite(f):
            return None
        step = f / d
        t = 1.0
        for _ in range(40):
            trial = lam - t * step
            ft = char_value(coeffs, trial)
            if abs(ft) < abs(f) or abs(ft) == 0.0:
                break
            t *= 0.5
        else:
            return lam if residual_ok(coeffs, lam) else None
        lam, f = trial, ft
        if abs(t * step) <= 1e-15 * (1.0 + abs(lam)):
            break
    return lam if residual_ok(coeffs, lam) else None


def _left_edge(coeffs, im_max):
    """Abscissa left of which the exponential term dominates the quadratic."""
    c = coeffs
    lim = 1.0
    while True:
        r = lim + im_max
        poly = (r + c.mu1) * (r + c.mu2) + c.b
        if c.tau * lim > 700 or math.log(c.a) - c.tau * (-lim) > math.log(2.0 * poly):
            return -lim
        lim *= 1.5


def _right_edge(coeffs):
    # for Re lambda >= R the quadratic exceeds a + b in modulus
    c = coeffs
    return math.sqrt(c.a + c.b) + 1.0


def band(coeffs: LinearCoeffs, k: int) -> tuple[float, float]:
    """Imaginary-part interval of band ``k``."""
    w = math.pi / coeffs.tau
    return 2 * k * w, (2 * k + 1) * w


def band_roots(coeffs: LinearCoeffs, k: int, n_re: int = 40, n_im: int = 8,
               extra_seeds=()) -> list[complex]:
    """Roots with imaginary part inside band ``k``, found by Newton from a seed grid."""
    lo, hi = band(coeffs, k)
    if coeffs.a == 0.0:
        return []
    left, right = _left_edge(coeffs, hi), _right_edge(coeffs)
    seeds = list(extra_seeds)
    for re in np.linspace(left, right, n_re):
        for im in np.linspace(lo, hi, n_im + 2)[1:-1]:
            seeds.append(complex(re, im))
    found: list[complex] = []
    for s in seeds:
        r = _newton(coeffs, s)
        if r is None or not (lo < r.imag < hi):
            continue
        if all(abs(r - q) > 1e-8 * (1.0 + abs(q)) for q in found):
            found.append(r)
    found.sort(key=lambda z: -z.real)
    return found


def strip_root(coeffs: LinearCoeffs) -> complex | None:
    """Root in the fundamental strip Im in (0, pi/tau) with the largest real part."""
    seeds = []
    if coeffs.a > 0:
        alpha_lim = math.log(coeffs.a / (coeffs.mu1 * coeffs.mu2 + coeffs.b))
        seeds.append(complex(alpha_lim, math.pi * (1.0 - 1e-3)) / coeffs.tau)
    roots = band_roots(coeffs, 0, extra_seeds=seeds)
    return roots[0] if roots else None


def leading_pair(coeffs: LinearCoeffs) -> complex | None:
    """Upper member alpha0 + i beta0 of the leading pair when it is unstable.

    Returns None when the strip holds no root with positive real part.
    """
    r = strip_root(coeffs)
    if r is None:
        if coeffs.a > coeffs.mu1 * coeffs.mu2 + coeffs.b:
            warnings.warn("no root located in the fundamental strip", RuntimeWarning, stacklevel=2)
        return None
    return r if r.real > 0 else None


def epsilon_asymptotics(coeffs: LinearCoeffs) -> tuple[float, float]:
    """Small-eps = 1/tau behaviour of the scaled leading root z = tau lambda.

    z(0) = ln[a/(mu1 mu2 + b)] + i pi, and Im z'(0) = -pi (mu1+mu2)/(mu1 mu2 + b).
    """
    c = coeffs
    if not c.a > 0:
        raise ValueError("epsilon asymptotics need a > 0")
    k = c.mu1 * c.mu2 + c.b
    return math.log(c.a / k), -math.pi * (c.mu1 + c.mu2) / k


def count_band_roots(coeffs: LinearCoeffs, k: int, n: int = 4000) -> int:
    """Number of roots in band ``k`` by the argument principle.

    Band 0 is counted over the symmetric rectangle |Im| < pi/tau and
    halved after removing real roots, so the contour never crosses the real axis.
    """
    lo, hi = band(coeffs, k)
    if k == 0:
        lo = -hi
    left = _left_edge(coeffs, hi) - 0.5
    right = max(_right_edge(coeffs), search_radius(coeffs) if k == 0 else 0.0)
    # keep the phase resolution below pi per sample along horizontal edges
    n_h = max(n, int(4 * coeffs.tau * (right - left)))
    edges = [
        np.linspace(left, right, n_h) + 1j * lo,
        right + 1j * np.linspace(lo, hi, n),
        np.linspace(right, left, n_h) + 1j * hi,
        left + 1j * np.linspace(hi, lo, n),
    ]
    path = np.concatenate(edges)
    c = coeffs
    vals = (path + c.mu1) * (path + c.mu2) + c.b + c.a * np.exp(-c.tau * path)
    turns = np.sum(np.diff(np.unwrap(np.angle(vals)))) / (2 * math.pi)
    count = int(round(turns))
    if k == 0:
        n_real = len(find_real_roots(c, (left, right)))
        count = (count - n_real) // 2
    return count


@dataclass
class EigenReport:
    coeffs: LinearCoeffs
    real_roots: list[float]
    leading_pair: complex | None
    strip_root: complex | None
    band_ok: bool
    stable: bool
    epsilon_limit: tuple[float, float] | None
    band_counts: dict[int, int] = field(default_factory=dict)
    band_roots: dict[int, list[complex]] = field(default_factory=dict)

    def summary(self) -> str:
        c = self.coeffs
        lines = [f"mu1={c.mu1:.10g} mu2={c.mu2:.10g} a={c.a:.10g} b={c.b:.10g} tau={c.tau:.10g}",
                 f"real roots: {', '.join(f'{r:.10g}' for r in self.real_roots) or 'none'}"]
        if self.strip_root is not None:
            z = self.strip_root
            lines.append(f"strip root: {z.real:.10g} + {z.imag:.10g}i  "
                         f"(beta*tau/pi = {z.imag * c.tau / math.pi:.10g})")
        else:
            lines.append("strip root: none located")
        lines.append(f"band check: {self.band_ok}  stable: {self.stable}")
        if self.epsilon_limit is not None:
            lines.append(f"eps-limit: tau*alpha0 -> {self.epsilon_limit[0]:.10g}, "
                         f"nu'(0) = {self.epsilon_limit[1]:.10g}")
        for k, n in self.band_counts.items():
            lines.append(f"band {k}: {n} root(s) by contour, {len(self.band_roots.get(k, []))} located")
        return "\n".join(lines)


def eigen_report(coeffs: LinearCoeffs, max_band: int = 3) -> EigenReport:
    reals = find_real_roots(coeffs)
    z = strip_root(coeffs)
    lead = z if z is not None and z.real > 0 else None
    lo, hi = band(coeffs, 0)
    band_ok = z is not None and lo < z.imag < hi
    counts, located = {}, {}
    if coeffs.a > 0:
        for k in range(1, max_band + 1):
            counts[k] = count_band_roots(coeffs, k)
            located[k] = band_roots(coeffs, k)
        counts = {0: count_band_roots(coeffs, 0), **counts}
    located[0] = [z] if z is not None else []
    all_re = list(reals) + [r.real for rs in located.values() for r in rs]
    eps = epsilon_asymptotics(coeffs) if coeffs.a > 0 else None
    return EigenReport(coeffs, reals, lead, z, band_ok, all(x < 0 for x in all_re), eps,
                       counts, located)
