"""Oscillation diagnostics and experiment harnesses over many integrations."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ddesim import InitialData, IntegratorOptions, Trajectory, integrate
from .errors import GlucodelayError
from .intervalmap import analyze_map, persistence_bounds
from .model import Equilibrium, ModelConfig, solve_equilibrium

VERDICTS = ("converges", "periodic", "undecided")


def find_zeros(traj: Trajectory, component: str = "G", level: float = 0.0,
               t_min: float | None = None) -> list[float]:
    """Sign changes of ``component - level`` refined by bisection on the dense interpolant."""
    if len(traj) < 2:
        raise ValueError("trajectory needs at least 2 nodes")
    t = traj.t
    v = traj.component(component) - level
    start = 0 if t_min is None else max(0, int(np.searchsorted(t, t_min)) - 1)
    s = np.sign(v[start:])
    idx = np.nonzero(s)[0]
    zeros = []
    # consecutive non-zero samples of opposite sign; exact zeros between them become the crossing
    for a, b in zip(idx[:-1], idx[1:]):
        if s[a] == s[b]:
            continue
        i, j = start + a, start + b
        if j > i + 1:
            zeros.append(float(t[i + 1]) if j == i + 2 else 0.5 * (t[i + 1] + t[j - 1]))
            continue
        lo, hi = float(t[i]), float(t[j])
        sign_lo = s[a]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            fm = traj.dense_eval(mid, component) - level
            if fm == 0.0:
                lo = hi = mid
                break
            if np.sign(fm) == sign_lo:
                lo = mid
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    if t_min is not None:
        zeros = [z for z in zeros if z >= t_min]
    return zeros


def _uniform(traj, component, t0, n=4096):
    grid = np.linspace(t0, traj.t[-1], n)
    return grid, np.interp(grid, traj.t, traj.component(component))


def autocorrelation_period(traj: Trajectory, component: str, t0: float) -> float | None:
    """Lag of the first autocorrelation maximum after its first zero crossing."""
    grid, x = _uniform(traj, component, t0)
    x = x - x.mean()
    if not np.any(x):
        return None
    n = len(x)
    spec = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(spec * np.conj(spec))[:n]
    # unbiased normalisation so long lags are not suppressed
    ac = ac / (n - np.arange(n))
    ac /= ac[0]
    neg = np.nonzero(ac < 0)[0]
    if neg.size == 0:
        return None
    k0 = int(neg[0])
    limit = int(0.75 * n)
    peaks = [k for k in range(k0 + 1, limit - 1)
             if ac[k] > 0 and ac[k] >= ac[k - 1] and ac[k] > ac[k + 1]]
    if not peaks:
        return None
    k = peaks[0]
    y0, y1, y2 = ac[k - 1], ac[k], ac[k + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    return float((k + shift) * (grid[1] - grid[0]))


@dataclass
class OscillationReport:
    zeros_I: list[float]
    zeros_G: list[float]
    slow_I: bool
    slow_G: bool
    interlaced: bool
    first_zero: str | None
    period: float | None
    period_autocorr: float | None
    amplitude_I: float
    amplitude_G: float
    g_range: tuple[float, float]
    i_range: tuple[float, float]
    tail_distance: float
    period_mismatch: float | None
    extrema_per_period: float | None
    verdict: str


def _interlaced(zi, zg):
    merged = sorted([(z, "I") for z in zi] + [(z, "G") for z in zg])
    if len(merged) < 2:
        return True, (merged[0][1] if merged else None)
    ok = all(a[1] != b[1] and b[0] > a[0] for a, b in zip(merged, merged[1:]))
    return ok, merged[0][1]


def oscillation_report(traj: Trajectory, eq: Equilibrium, tau: float,
                       tail_fraction: float = 0.5, converge_tol: float = 1e-4,
                       converge_fraction: float = 0.2, period_rtol: float = 0.01,
                       match_tol: float = 1e-3, t_min: float | None = None) -> OscillationReport:
    """Zeros, slow-oscillation flags, interlacing, period and verdict over the tail window.

    ``t_min`` overrides the tail window for the zero analysis (use 0 for the whole run).
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    t_end = traj.t[-1]
    t0 = t_end - tail_fraction * (t_end - traj.t[0])
    tz = t0 if t_min is None else t_min
    zi = find_zeros(traj, "I", eq.i_star, t_min=tz)
    zg = find_zeros(traj, "G", eq.g_star, t_min=tz)
    slow = lambda z: bool(np.all(np.diff(z) > tau)) if len(z) > 1 else True
    inter, first = _interlaced(zi, zg)

    tail = traj.tail(tail_fraction)
    gi, gg = traj.I[tail], traj.G[tail]
    amp_i = float(gi.max() - gi.min()) / 2
    amp_g = float(gg.max() - gg.min()) / 2
    conv = traj.tail(converge_fraction)
    dist = float(max(np.max(np.abs(traj.I[conv] - eq.i_star)),
                     np.max(np.abs(traj.G[conv] - eq.g_star))))

    period = p_ac = mismatch = extrema = None
    zt = [z for z in zg if z >= t0]
    if len(zt) >= 3:
        period = float(np.mean(np.array(zt[2:]) - np.array(zt[:-2])))
        p_ac = autocorrelation_period(traj, "G", t0)
        if t_end - period > t0:
            ts = np.linspace(t_end - period, t_end, 200)
            later = np.interp(ts, traj.t, traj.G)
            earlier = np.interp(ts - period, traj.t, traj.G)
            mismatch = float(np.max(np.abs(later - earlier)))
        d = np.diff(gg)
        n_max = int(np.sum((d[:-1] > 0) & (d[1:] <= 0)))
        extrema = n_max * period / (t_end - t0)

    if dist < converge_tol:
        verdict = "converges"
    elif (period is not None and p_ac is not None
          and abs(p_ac - period) <= period_rtol * period
          and mismatch is not None and mismatch < match_tol * max(amp_g, 1e-300)):
        verdict = "periodic"
    else:
        verdict = "undecided"
    return OscillationReport(
        zeros_I=zi, zeros_G=zg, slow_I=slow(zi), slow_G=slow(zg), interlaced=inter,
        first_zero=first, period=period, period_autocorr=p_ac, amplitude_I=amp_i,
        amplitude_G=amp_g, g_range=(float(gg.min()), float(gg.max())),
        i_range=(float(gi.min()), float(gi.max())), tail_distance=dist,
        period_mismatch=mismatch, extrema_per_period=extrema,
        verdict=verdict,
    )


# -- parallel plumbing ---------------------------------------------------------------


def run_map(fn, items, jobs: int = 1):
    """Ordered map over ``items``, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class SweepPoint:
    parameter: float
    amplitude: float | None
    period: float | None
    verdict: str
    report: OscillationReport | None = None
    error: str | None = None

    @property
    def ratio(self) -> float | None:
        """2 tau / T for tau sweeps."""
        if self.period is None:
            return None
        return 2.0 * self.parameter / self.period


@dataclass
class SweepResult:
    axis: str
    points: list[SweepPoint] = field(default_factory=list)

    def parameters(self) -> np.ndarray:
        return np.array([p.parameter for p in self.points])

    def amplitudes(self) -> np.ndarray:
        return np.array([np.nan if p.amplitude is None else p.amplitude for p in self.points])


def _simulate_point(args):
    cfg, init, opts, eq, t_min = args
    try:
        traj = integrate(cfg, init, opts)
    except GlucodelayError as exc:
        return None, str(exc)
    return oscillation_report(traj, eq, cfg.tau, t_min=t_min), None


def _point(param, rep, err):
    if rep is None:
        return SweepPoint(param, None, None, "undecided", None, err)
    period = rep.period if rep.verdict == "periodic" else None
    return SweepPoint(param, rep.amplitude_G, period, rep.verdict, rep)


def ic_sweep(cfg: ModelConfig, values, opts: IntegratorOptions, jobs: int = 1) -> SweepResult:
    """Constant initial data I = G = value on [-tau, 0] for each value."""
    eq = solve_equilibrium(cfg)
    values = sorted(float(v) for v in values)
    args = [(cfg, InitialData.constant(v, v), opts, eq, None) for v in values]
    out = run_map(_simulate_point, args, jobs)
    return SweepResult("ic", [_point(v, rep, err) for v, (rep, err) in zip(values, out)])


def tau_sweep(cfg: ModelConfig, taus, opts: IntegratorOptions, init: InitialData,
              jobs: int = 1, t_end_per_tau: float | None = None) -> SweepResult:
    """One run per delay; periods give the ratio 2 tau / T."""
    taus = [float(t) for t in taus]
    if any(t <= 0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be positive and increasing")
    eq = solve_equilibrium(cfg)
    args = []
    for tau in taus:
        o = opts
        if t_end_per_tau is not None:
            o = dataclasses.replace(opts, t_end=t_end_per_tau * tau)
        args.append((cfg.replace(tau=tau), init, o, eq, None))
    out = run_map(_simulate_point, args, jobs)
    return SweepResult("tau", [_point(t, rep, err) for t, (rep, err) in zip(taus, out)])


@dataclass
class AttractorCluster:
    kind: str
    amplitude: float
    period: float | None
    count: int
    members: list[int]


def cluster_reports(reports, match_tol: float = 0.05) -> list[AttractorCluster]:
    """Greedy clustering in seed order; amplitude and period match within ``match_tol`` relative."""
    clusters: list[AttractorCluster] = []
    for i, rep in enumerate(reports):
        if rep is None or rep.verdict == "undecided":
            clusters.append(AttractorCluster("undecided", math.nan if rep is None else rep.amplitude_G,
                                             None, 1, [i]))
            continue
        if rep.verdict == "converges":
            kind, amp, per = "equilibrium", 0.0, None
        else:
            kind, amp, per = "periodic", rep.amplitude_G, rep.period
        for c in clusters:
            if c.kind != kind:
                continue
            if kind == "equilibrium" or (
                    abs(c.amplitude - amp) <= match_tol * max(c.amplitude, amp)
                    and abs(c.period - per) <= match_tol * max(c.period, per)):
                c.count += 1
                c.members.append(i)
                break
        else:
            clusters.append(AttractorCluster(kind, amp, per, 1, [i]))
    return clusters


def multistability_census(cfg: ModelConfig, seeds, opts: IntegratorOptions,
                          match_tol: float = 0.05, jobs: int = 1):
    """Cluster the long-run behaviour of many initial data.

    Returns (clusters, reports) with reports in seed order.
    """
    seeds = list(seeds)
    if len(seeds) < 10:
        raise ValueError("a census needs at least 10 seeds")
    eq = solve_equilibrium(cfg)
    out = run_map(_simulate_point, [(cfg, s, opts, eq, None) for s in seeds], jobs)
    reports = [rep for rep, _ in out]
    return cluster_reports(reports, match_tol), reports


@dataclass
class ConsistencyRow:
    tau: float
    regime: str
    verdicts: list[str]
    g_min: float
    g_max: float
    alpha: float
    beta: float
    within: bool


def map_dde_consistency(cfg: ModelConfig, taus, seeds=None, opts: IntegratorOptions | None = None,
                        t_end_per_tau: float = 100.0, tol: float = 1e-3, jobs: int = 1):
    """Pair the map regime with DDE verdicts and compare the G-range to [alpha*, beta*]."""
    analysis = analyze_map(cfg)
    eq = solve_equilibrium(cfg)
    alpha, beta = analysis.l_star
    if seeds is None:
        pb = persistence_bounds(cfg, analysis)
        lo, hi = pb.m_G, pb.M_G
        seeds = [InitialData.constant(cfg.tau0 * cfg.f1(g), g)
                 for g in (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo))]
    opts = opts or IntegratorOptions(rtol=1e-8, atol=1e-10)
    rows = []
    for tau in taus:
        o = dataclasses.replace(opts, t_end=t_end_per_tau * tau)
        c = cfg.replace(tau=float(tau), check=False)
        out = run_map(_simulate_point, [(c, s, o, eq, None) for s in seeds], jobs)
        reps = [r for r, _ in out if r is not None]
        g_min = min(r.g_range[0] for r in reps) if reps else math.nan
        g_max = max(r.g_range[1] for r in reps) if reps else math.nan
        rows.append(ConsistencyRow(
            float(tau), analysis.regime,
            [r.verdict if r is not None else "undecided" for r, _ in out],
            g_min, g_max, alpha, beta,
            bool(reps) and g_min >= alpha - tol and g_max <= beta + tol))
    return rows


def detect_transitions(result: SweepResult, factor: float = 10.0, window: int = 3) -> list[float]:
    """Parameter values where the amplitude jumps by more than ``factor`` times its local variation."""
    p = result.parameters()
    a = result.amplitudes()
    if len(p) < 3:
        return []
    jumps = np.abs(np.diff(a))
    scale = np.nanmax(np.abs(a)) if np.any(np.isfinite(a)) else 0.0
    floor = 1e-9 * max(scale, 1.0)
    out = []
    for i, j in enumerate(jumps):
        if not np.isfinite(j):
            continue
        nb = [jumps[k] for k in range(max(0, i - window), min(len(jumps), i + window + 1))
              if k != i and np.isfinite(jumps[k])]
        local = max(float(np.median(nb)) if nb else 0.0, floor)
        if j > factor * local and j > floor:
            out.append(0.5 * (p[i] + p[i + 1]))
    return out
