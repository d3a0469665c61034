"""INI config files: ``[model]``, one section per nonlinearity, and per-command defaults.

Example::

    [model]
    variant = MSin
    tau = 5
    delta = 0.1

    [f4]
    kind = arctan
    eps = 0.1
    A = 2
    B = 1

    [f5]
    kind = fa
    A = 1
    k = 20
    s = 10
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, GlucodelayError
from .functions import FunctionSpec, make_function
from .model import ModelConfig

FUNCTION_SECTIONS = ("f1", "f2", "f4", "f5")
MODEL_KEYS = {"variant": str, "tau0": float, "g_in": float, "q": float, "tau": float,
              "a1": float, "a2": float, "a4": float, "delta": float, "B": float}
COMMAND_SECTIONS = ("simulate", "map-analyze", "eigen", "sweep", "converge")


@dataclass
class LoadedConfig:
    path: str
    model: ModelConfig
    commands: dict[str, dict[str, str]] = field(default_factory=dict)

    def defaults(self, command: str) -> dict[str, str]:
        return self.commands.get(command, {})


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) to the 1-based line where the key is defined."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1)), n)
    return index


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _number(value, where, lineno=None):
    try:
        return float(_unquote(value))
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {value!r}", lineno) from None


def parse_config(text: str, path: str = "<string>") -> LoadedConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"{path}: malformed line", lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc.message}", getattr(exc, "lineno", None)) from None
    lines = _line_index(text)

    def where(section, key):
        return f"[{section}] {key}"

    def fail(section, key, msg):
        raise ConfigError(f"{path}: {where(section, key)}: {msg}", lines.get((section, key)))

    if not parser.has_section("model"):
        raise ConfigError(f"{path}: missing [model] section")
    kwargs = {}
    for key, raw in parser.items("model"):
        if key not in MODEL_KEYS:
            fail("model", key, f"unknown key; expected one of {sorted(MODEL_KEYS)}")
        if MODEL_KEYS[key] is str:
            kwargs[key] = _unquote(raw)
        else:
            kwargs[key] = _number(raw, where("model", key), lines.get(("model", key)))

    for name in FUNCTION_SECTIONS:
        if not parser.has_section(name):
            continue
        items = dict(parser.items(name))
        if "kind" not in items:
            raise ConfigError(f"{path}: [{name}] needs a 'kind'", _section_line(text, name))
        kind = _unquote(items.pop("kind"))
        params = {}
        for key, raw in items.items():
            params[key] = _number(raw, where(name, key), lines.get((name, key)))
        try:
            kwargs[name] = make_function(kind, **params)
        except (ConfigError, ValueError, TypeError) as exc:
            fail(name, "kind", str(exc))

    try:
        model = ModelConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except GlucodelayError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    commands = {}
    for section in parser.sections():
        if section == "model" or section in FUNCTION_SECTIONS:
            continue
        if section not in COMMAND_SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]",
                              _section_line(text, section))
        commands[section] = {k: _unquote(v) for k, v in parser.items(section)}
    return LoadedConfig(path, model, commands)


def _section_line(text, section):
    for n, line in enumerate(text.splitlines(), start=1):
        if line.strip() == f"[{section}]":
            return n
    return None


def load_config(path) -> LoadedConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(p))


def _fmt(x: float) -> str:
    # shortest round-tripping form
    return repr(float(x))


def dump_function(name: str, spec: FunctionSpec) -> str:
    if spec.kind == "shifted":
        raise ConfigError("shifted specs are derived and cannot be written to a config")
    body = [f"[{name}]", f"kind = {spec.kind}"]
    body += [f"{k} = {_fmt(v)}" for k, v in spec.params.items()]
    return "\n".join(body)


def dump_config(cfg: ModelConfig) -> str:
    """Inverse of :func:`parse_config` for MS, MSs and MSin configs."""
    if cfg.variant == "MS0":
        raise ConfigError("MS0 configs are derived by translation; write the MS config instead")
    model = ["[model]", f"variant = {cfg.variant}", f"tau0 = {_fmt(cfg.tau0)}",
             f"tau = {_fmt(cfg.tau)}"]
    if cfg.variant == "MS":
        model += [f"g_in = {_fmt(cfg.g_in)}", f"q = {_fmt(cfg.q)}"]
        names = FUNCTION_SECTIONS
    else:
        model += [f"a1 = {_fmt(cfg.a1)}", f"a2 = {_fmt(cfg.a2)}"]
        if cfg.variant == "MSs":
            model.append(f"a4 = {_fmt(cfg.a4)}")
            names = ("f5",)
        else:
            model += [f"delta = {_fmt(cfg.delta)}", f"B = {_fmt(cfg.B)}"]
            names = ("f4", "f5")
    parts = ["\n".join(model)] + [dump_function(n, getattr(cfg, n)) for n in names]
    return "\n\n".join(parts) + "\n"
