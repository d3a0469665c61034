"""Command-line entry point: ``glucodelay <command> CONFIG [options]``.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure.
Output directory: ``--out``, else ``$GLUCODELAY_OUT``, else ``out/<command>``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import detect_transitions, ic_sweep, oscillation_report, tau_sweep
from .chareq import char_value, eigen_report
from .config import load_config
from .csvio import write_csv, write_step_log, write_trajectory
from .ddesim import InitialData, IntegratorOptions, integrate, self_convergence
from .errors import ConfigError, GlucodelayError
from .intervalmap import (analyze_map, classify_de_solution, iterate_difference_equation,
                          persistence_bounds)
from .model import linearize, solve_equilibrium

ENV_OUT = "GLUCODELAY_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _initial(text: str) -> InitialData:
    vals = _floats(text)
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise ConfigError(f"--ic takes 'v' or 'I0,G0', got {text!r}")
    return InitialData.constant(*vals)


# option name -> (converter, built-in default)
SPECS = {
    "simulate": {"tau": (float, None), "t_end": (float, 100.0), "method": (str, "rkf45"),
                 "dt": (float, None), "rtol": (float, 1e-8), "atol": (float, 1e-10),
                 "ic": (str, "1.0,1.0"), "order": (int, 4)},
    "map-analyze": {"nmax": (int, 10000), "grid": (int, 2048), "collapse_tol": (float, 1e-8),
                    "g0": (float, None), "steps": (int, 2000)},
    "eigen": {"tau_list": (str, None)},
    "sweep": {"axis": (str, "ic"), "from": (float, None), "to": (float, None),
              "step": (float, None), "jobs": (int, 1), "t_end": (float, 500.0),
              "t_end_per_tau": (float, None), "ic": (str, "1.0,1.0"), "method": (str, "rkf45"),
              "dt": (float, None), "rtol": (float, 1e-8), "atol": (float, 1e-10)},
    "converge": {"dts": (str, "0.1,0.05,0.025,0.0125"), "methods": (str, "rk4,euler"),
                 "t_end": (float, 20.0), "tau": (float, None), "ic": (str, "1.0,1.0"),
                 "order": (int, 4)},
}


def _resolve(command, args, loaded) -> dict:
    """Flags override the config's ``[command]`` section, which overrides built-ins."""
    section = loaded.defaults(command)
    out = {}
    for name, (conv, default) in SPECS[command].items():
        value = getattr(args, name, None)
        if value is None and name in section:
            try:
                value = conv(section[name])
            except ValueError:
                raise ConfigError(f"[{command}] {name}: cannot parse {section[name]!r}") from None
        out[name] = default if value is None else value
    unknown = set(section) - set(SPECS[command])
    if unknown:
        raise ConfigError(f"[{command}] unknown keys: {sorted(unknown)}")
    return out


def _outdir(command, args) -> Path:
    base = args.out or os.environ.get(ENV_OUT) or os.path.join("out", command)
    p = Path(base)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _manifest(out: Path, command, config_path, options, started, files):
    data = {
        "config": str(config_path),
        "subcommand": command,
        "options": options,
        "output_dir": str(out),
        "files": sorted(files),
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _options(o, method=None):
    method = method or o["method"]
    return IntegratorOptions(method=method, t_end=o["t_end"], dt=o.get("dt"),
                             rtol=o["rtol"], atol=o["atol"],
                             interpolation_order=o.get("order", 4))


def cmd_simulate(args, loaded, out):
    o = _resolve("simulate", args, loaded)
    cfg = loaded.model if o["tau"] is None else loaded.model.replace(tau=o["tau"])
    o["tau"] = cfg.tau
    traj = integrate(cfg, _initial(o["ic"]), _options(o))
    files = [write_trajectory(out / "trajectory.csv", traj).name,
             write_step_log(out / "steplog.csv", traj).name]
    if args.phase:
        files.append(write_csv(out / "phase.csv", ("I", "G"), zip(traj.I, traj.G)).name)
    eq = solve_equilibrium(cfg)
    rep = oscillation_report(traj, eq, cfg.tau)
    print(f"equilibrium (I*, G*) = ({eq.i_star:.12g}, {eq.g_star:.12g})")
    print(f"nodes {len(traj)}  accepted {traj.accepted_steps}  rejected {traj.rejected_steps}")
    print(f"verdict {rep.verdict}  tail distance {rep.tail_distance:.3g}  "
          f"G amplitude {rep.amplitude_G:.10g}  period {rep.period}")
    return o, files


def cmd_map_analyze(args, loaded, out):
    o = _resolve("map-analyze", args, loaded)
    cfg = loaded.model
    ana = analyze_map(cfg, n_max=o["nmax"], collapse_tol=o["collapse_tol"], grid=o["grid"])
    g0 = o["g0"]
    if g0 is None:
        g0 = 0.5 * (ana.phi_inf + ana.phi0)
        if abs(g0 - ana.fixed_point) < 1e-6 * (1 + abs(g0)):
            g0 = ana.phi0
    orbit = iterate_difference_equation(cfg, g0, o["steps"])
    verdict = classify_de_solution(orbit) if len(orbit) >= 64 else "undecided"
    pb = persistence_bounds(cfg, ana)
    files = [
        write_csv(out / "intervals.csv", ("n", "alpha", "beta", "width"),
                  ((n + 1, a, b, b - a) for n, (a, b) in enumerate(ana.intervals))).name,
        write_csv(out / "cycles.csv", ("gamma", "delta", "multiplier", "stability", "residual"),
                  ((c.gamma, c.delta, c.multiplier, c.stability, c.residual)
                   for c in ana.two_cycles)).name,
        write_csv(out / "orbit.csv", ("n", "G"), enumerate(orbit)).name,
    ]
    text = (ana.summary()
            + f"\npersistence       I in [{pb.m_I:.10g}, {pb.M_I:.10g}], "
              f"G in [{pb.m_G:.10g}, {pb.M_G:.10g}]"
            + f"\nDE orbit from {g0:.10g}: {verdict}\n")
    (out / "summary.txt").write_text(text)
    files.append("summary.txt")
    print(text, end="")
    o["g0"] = g0
    return o, files


def cmd_eigen(args, loaded, out):
    o = _resolve("eigen", args, loaded)
    taus = _floats(o["tau_list"]) if o["tau_list"] else [loaded.model.tau]
    o["tau_list"] = ",".join(repr(t) for t in taus)
    base = linearize(loaded.model)
    rows, files = [], []
    for tau in taus:
        rep = eigen_report(base.with_tau(tau))
        z = rep.strip_root
        alpha, beta = (z.real, z.imag) if z is not None else (math.nan, math.nan)
        rows.append((tau, alpha, beta, beta * tau / math.pi, rep.stable, rep.band_ok))
        print(f"-- tau = {tau:g}\n{rep.summary()}")
        if args.grid_csv:
            c = base.with_tau(tau)
            res = np.linspace(-2.0, 2.0, 81)
            ims = np.linspace(0.0, math.pi / tau, 41)
            name = f"strip_grid_tau{tau:g}.csv"
            write_csv(out / name, ("re", "im", "abs"),
                      ((x, y, abs(char_value(c, complex(x, y)))) for x in res for y in ims))
            files.append(name)
    files.append(write_csv(out / "eigen.csv",
                           ("tau", "alpha0", "beta0", "beta0tau_over_pi", "stable", "band_ok"),
                           rows).name)
    return o, files


def cmd_sweep(args, loaded, out):
    o = _resolve("sweep", args, loaded)
    if o["axis"] not in ("ic", "tau"):
        raise ConfigError(f"--axis must be 'ic' or 'tau', got {o['axis']!r}")
    if None in (o["from"], o["to"], o["step"]) or not o["step"] > 0 or o["to"] < o["from"]:
        raise ConfigError("sweep needs --from <= --to and a positive --step")
    n = int(math.floor((o["to"] - o["from"]) / o["step"] + 1e-9)) + 1
    values = [round(o["from"] + k * o["step"], 12) for k in range(n)]
    cfg = loaded.model
    opts = _options(o)
    if o["axis"] == "ic":
        res = ic_sweep(cfg, values, opts, jobs=o["jobs"])
        files = [write_csv(out / "ic_sweep.csv", ("value", "amplitude", "period", "verdict"),
                           ((p.parameter, p.amplitude, p.period, p.verdict)
                            for p in res.points)).name]
    else:
        res = tau_sweep(cfg, values, opts, _initial(o["ic"]), jobs=o["jobs"],
                        t_end_per_tau=o["t_end_per_tau"])
        files = [write_csv(out / "tau_sweep.csv", ("tau", "ratio", "period", "verdict"),
                           ((p.parameter, p.ratio, p.period, p.verdict)
                            for p in res.points)).name]
    for p in res.points:
        print(f"{o['axis']}={p.parameter:<10g} verdict {p.verdict:<10} amplitude "
              f"{p.amplitude if p.amplitude is None else format(p.amplitude, '.8g')} "
              f"period {p.period if p.period is None else format(p.period, '.8g')}")
    trans = detect_transitions(res)
    print("transitions: " + (", ".join(f"{t:.10g}" for t in trans) or "none"))
    o["transitions"] = trans
    return o, files


def cmd_converge(args, loaded, out):
    o = _resolve("converge", args, loaded)
    cfg = loaded.model if o["tau"] is None else loaded.model.replace(tau=o["tau"])
    o["tau"] = cfg.tau
    dts = _floats(o["dts"])
    rows, orders = [], []
    for method in [m.strip() for m in o["methods"].split(",") if m.strip()]:
        r = self_convergence(cfg, _initial(o["ic"]), dts, method, o["t_end"], o["order"])
        rows += [(method, dt, ei, eg) for dt, ei, eg in zip(r.dts, r.errors_I, r.errors_G)]
        orders.append((method, r.order_I, r.order_G))
        print(f"{method}: fitted order I {r.order_I:.4f}  G {r.order_G:.4f}")
    files = [write_csv(out / "convergence.csv", ("method", "dt", "L1_I", "L1_G"), rows).name,
             write_csv(out / "orders.csv", ("method", "order_I", "order_G"), orders).name]
    o["orders"] = {m: [a, b] for m, a, b in orders}
    return o, files


COMMANDS = {"simulate": cmd_simulate, "map-analyze": cmd_map_analyze, "eigen": cmd_eigen,
            "sweep": cmd_sweep, "converge": cmd_converge}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="glucodelay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"glucodelay {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("config", help="INI config file")
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUT} or out/<command>)")

    def integ(sp):
        sp.add_argument("--method", choices=("rkf45", "rk4", "euler"))
        sp.add_argument("--dt", type=float)
        sp.add_argument("--rtol", type=float)
        sp.add_argument("--atol", type=float)
        sp.add_argument("--ic", help="constant initial data 'v' or 'I0,G0'")

    s = sub.add_parser("simulate", help="integrate one trajectory")
    common(s)
    integ(s)
    s.add_argument("--tau", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--order", type=int, help="history interpolation order")
    s.add_argument("--phase", action="store_true", help="also write the (I, G) phase portrait")

    m = sub.add_parser("map-analyze", help="limiting interval map analysis and DE orbit")
    common(m)
    m.add_argument("--nmax", type=int)
    m.add_argument("--grid", type=int)
    m.add_argument("--collapse-tol", dest="collapse_tol", type=float)
    m.add_argument("--g0", type=float, help="start of the DE orbit")
    m.add_argument("--steps", type=int)

    e = sub.add_parser("eigen", help="characteristic roots at several delays")
    common(e)
    e.add_argument("--tau-list", dest="tau_list")
    e.add_argument("--grid-csv", dest="grid_csv", action="store_true",
                   help="write |char_value| over the fundamental strip")

    w = sub.add_parser("sweep", help="initial-value or delay sweep")
    common(w)
    integ(w)
    w.add_argument("--axis", choices=("ic", "tau"))
    w.add_argument("--from", dest="from", type=float)
    w.add_argument("--to", type=float)
    w.add_argument("--step", type=float)
    w.add_argument("--jobs", type=int)
    w.add_argument("--t-end", dest="t_end", type=float)
    w.add_argument("--t-end-per-tau", dest="t_end_per_tau", type=float)

    c = sub.add_parser("converge", help="self-convergence study of the fixed-step methods")
    common(c)
    c.add_argument("--dts")
    c.add_argument("--methods")
    c.add_argument("--tau", type=float)
    c.add_argument("--t-end", dest="t_end", type=float)
    c.add_argument("--ic")
    c.add_argument("--order", type=int)
    return p


def main(argv=None) -> int:
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        loaded = load_config(args.config)
        out = _outdir(args.command, args)
        options, files = COMMANDS[args.command](args, loaded, out)
        _manifest(out, args.command, args.config, options, started, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GlucodelayError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
