"""Scenario files for the command line.

A scenario is an INI file::

    [scenario]
    graph = seven.graph        ; relative to the scenario file
    kappa = 0.25
    x0 = 10 -1 1 8 5 5 12
    horizon = 60
    observed = 1 2 3           ; omit for full-state monitoring
    eps = 1e-9
    mode = partial             ; full | partial

    [faults]
    first = 10 14 6 5          ; first last tail head, last may be inf
    second = 20 24 5 7

    [outputs]
    trajectory = trajectory.csv
    residuals = residuals.csv
    audit = audit.csv

Fault ``first last tail head`` means the arc is missing while the network
produces the states ``x(first) .. x(last)``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

__all__ = ["ScenarioConfig", "FaultSpec", "parse_config", "read_config"]

MODES = ("full", "partial")


@dataclass(frozen=True)
class FaultSpec:
    name: str
    first: int
    last: int | None
    tail: int
    head: int

    def interval(self):
        return (self.first, self.last, self.tail, self.head)


@dataclass(frozen=True)
class ScenarioConfig:
    graph: str
    kappa: float
    x0: tuple
    horizon: int = 50
    observed: tuple | None = None
    eps: float = 1e-9
    mode: str = "full"
    faults: tuple = ()
    outputs: dict = field(default_factory=dict, hash=False)
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "partial" and not self.observed:
            raise ConfigError("partial mode needs a non-empty 'observed' list")
        if self.horizon < 1:
            raise ConfigError("horizon must be positive")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        n = len(self.x0)
        if self.observed is not None:
            if len(set(self.observed)) != len(self.observed):
                raise ConfigError("observed vertices must be distinct")
            if any(not 1 <= v <= n for v in self.observed):
                raise ConfigError(f"observed vertices must lie in [1, {n}]")
        prev_end = 0
        for f in sorted(self.faults, key=lambda f: f.first):
            if any(not 1 <= v <= n for v in (f.tail, f.head)):
                raise ConfigError(f"fault {f.name!r} references a vertex outside [1, {n}]")
            if f.first < 1 or (f.last is not None and f.last < f.first):
                raise ConfigError(f"fault {f.name!r} has an invalid interval")
            if f.first <= prev_end:
                raise ConfigError(f"fault {f.name!r} overlaps the previous fault")
            prev_end = math.inf if f.last is None else f.last

    @property
    def graph_path(self):
        p = Path(self.graph)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def intervals(self):
        return [f.interval() for f in sorted(self.faults, key=lambda f: f.first)]

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        sc = {
            "graph": self.graph,
            "kappa": repr(self.kappa),
            "x0": " ".join(repr(v) for v in self.x0),
            "horizon": str(self.horizon),
            "eps": repr(self.eps),
            "mode": self.mode,
        }
        if self.observed is not None:
            sc["observed"] = " ".join(str(v) for v in self.observed)
        cp["scenario"] = sc
        cp["faults"] = {
            f.name: f"{f.first} {'inf' if f.last is None else f.last} {f.tail} {f.head}"
            for f in self.faults
        }
        cp["outputs"] = dict(self.outputs)
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp[sec].items()]
            lines.append("")
        return "\n".join(lines)


def _floats(text, what):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _ints(text, what):
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_config(text: str, base_dir=".") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "scenario" not in cp:
        raise ConfigError("missing [scenario] section")
    sc = cp["scenario"]
    unknown = set(sc) - {"graph", "kappa", "x0", "horizon", "observed", "eps", "mode"}
    if unknown:
        raise ConfigError(f"unknown keys in [scenario]: {sorted(unknown)}")
    for key in ("graph", "kappa", "x0"):
        if key not in sc:
            raise ConfigError(f"[scenario] needs '{key}'")
    try:
        kappa = float(sc["kappa"])
        horizon = int(sc.get("horizon", "50"))
        eps = float(sc.get("eps", "1e-9"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    observed = _ints(sc["observed"], "observed") if sc.get("observed", "").strip() else None
    mode = sc.get("mode", "partial" if observed else "full").strip()
    faults = []
    if "faults" in cp:
        for name, value in cp["faults"].items():
            parts = value.split()
            if len(parts) != 4:
                raise ConfigError(f"fault {name!r}: expected 'first last tail head'")
            try:
                first = int(parts[0])
                last = None if parts[1].lower() in ("inf", "none", "-") else int(parts[1])
                tail, head = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise ConfigError(f"fault {name!r}: {exc}") from exc
            faults.append(FaultSpec(name, first, last, tail, head))
    outputs = dict(cp["outputs"]) if "outputs" in cp else {}
    return ScenarioConfig(
        graph=sc["graph"].strip(),
        kappa=kappa,
        x0=_floats(sc["x0"], "x0"),
        horizon=horizon,
        observed=observed,
        eps=eps,
        mode=mode,
        faults=tuple(faults),
        outputs=outputs,
        base_dir=str(base_dir),
    )


def read_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
