"""Experiment configuration files.

A config is an INI file with an ``[experiment]`` section of defaults and any
number of ``[series:NAME]`` sections that override them. Each series yields
one CSV. Keys::

    code, cv, dv, protocol      descriptors, e.g. cat(2,2), thermal(eta=0.05,nbar=0.5)
    sweep_param, sweep_grid     parameter substituted into the descriptors and its values
    averaging                   exact-haar | pauli6 | monte-carlo(N=2000,seed=0) | fixed-state(c0=1,c1=0)
    dim, guard, seed, output
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..channels import parse_args
from ..errors import ConfigError

__all__ = ["ExperimentConfig", "load_config", "parse_config", "substitute"]

_REQUIRED = ("code", "cv", "protocol", "sweep_param", "sweep_grid")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    code: str
    cv: str
    protocol: str
    sweep_param: str
    sweep_grid: tuple
    dv: str = "none"
    averaging: str = "exact-haar"
    dim: int = 40
    guard: int = 8
    seed: int = 0
    output: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.sweep_grid, dtype=float)
        if grid.size == 0:
            raise ConfigError(f"[{self.name}] sweep grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError(f"[{self.name}] sweep grid must be strictly increasing")
        mode, _ = parse_args(self.averaging.replace("-", "_"))
        if mode not in ("exact_haar", "pauli6", "monte_carlo", "fixed_state"):
            raise ConfigError(f"[{self.name}] unknown averaging mode {self.averaging!r}")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _parse_grid(text: str, where: str):
    text = text.strip()
    m = re.fullmatch(r"linspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)", text)
    try:
        if m:
            return tuple(np.linspace(float(m.group(1)), float(m.group(2)), int(m.group(3))).tolist())
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse sweep grid {text!r}") from None


def _build(name, section, where):
    missing = [k for k in _REQUIRED if k not in section]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")
    known = {"code", "cv", "dv", "protocol", "sweep_param", "sweep_grid", "averaging", "dim", "guard", "seed", "output"}
    notes = {k: v for k, v in section.items() if k not in known}
    try:
        return ExperimentConfig(
            name=name,
            code=section["code"],
            cv=section["cv"],
            dv=section.get("dv", "none"),
            protocol=section["protocol"],
            sweep_param=section["sweep_param"].strip(),
            sweep_grid=_parse_grid(section["sweep_grid"], f"{where}, field sweep_grid"),
            averaging=section.get("averaging", "exact-haar"),
            dim=int(section.get("dim", 40)),
            guard=int(section.get("guard", 8)),
            seed=int(section.get("seed", 0)),
            output=section.get("output", f"{name}.csv"),
            notes=notes,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text: str, source="<string>"):
    """Parse config text into a list of :class:`ExperimentConfig`, one per series."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if "experiment" not in parser:
        raise ConfigError(f"{source}: missing [experiment] section")
    base = dict(parser["experiment"])
    series = [s for s in parser.sections() if s.startswith("series:")]
    if not series:
        return [_build(base.get("name", "experiment"), base, f"{source} [experiment]")]
    out = []
    for s in series:
        merged = {**base, **dict(parser[s])}
        out.append(_build(s.split(":", 1)[1].strip(), merged, f"{source} [{s}]"))
    return out


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def substitute(descriptor: str, key: str, value: float) -> tuple[str, bool]:
    """Replace ``key=...`` inside a descriptor; returns the new text and whether it matched."""
    pattern = re.compile(rf"(?<![\w.]){re.escape(key)}\s*=\s*[^,)]+")
    new, count = pattern.subn(f"{key}={value!r}", descriptor)
    return new, count > 0
