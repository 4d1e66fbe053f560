"""Experiment configuration: an INI file with one section per module plus ``--set`` overrides.

Example::

    [experiment]
    algorithm = alg1
    seeds = 0-19
    out = results

    [graph]
    n = 20
    p = 0.2

    [costs]
    beta_set = 1,2,3,4,5
    center_set = 1,2,3,4,5
    x0_low = 1
    x0_high = 5

    [optimizer]
    alpha = 0.12
    delta0 = 0.1
    eps_s1 = 1e-3
    eps_s2 = 1e-3
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from .._rational import as_rational
from ..optimizer import ALGORITHMS, OptimizerConfig


class ConfigError(ValueError):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"0-19"``, ``"1,4,7"`` or a mix like ``"0-3,10"``."""
    seeds: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        try:
            lo, sep, hi = part.partition("-")
            if sep:
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed list entry {part!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return seeds


def _rational_list(text) -> list[Fraction]:
    try:
        return [as_rational(t) for t in str(text).split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad number list {text!r}") from None


def _bool(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


@dataclass
class CostSpec:
    beta: list[Fraction] | None = None
    center: list[Fraction] | None = None
    beta_set: list[Fraction] = field(default_factory=lambda: [Fraction(v) for v in range(1, 6)])
    center_set: list[Fraction] = field(default_factory=lambda: [Fraction(v) for v in range(1, 6)])
    x0: list[Fraction] | None = None
    x0_low: Fraction = Fraction(1)
    x0_high: Fraction = Fraction(5)


@dataclass
class GraphSpec:
    n: int = 20
    p: float = 0.2
    file: str | None = None
    # None: each trial draws its graph from its own seed
    seed: int | None = None


@dataclass
class ExperimentConfig:
    algorithm: str = "alg1"
    graph: GraphSpec = field(default_factory=GraphSpec)
    costs: CostSpec = field(default_factory=CostSpec)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    out: Path = Path("results")
    trace: bool = False
    jobs: int = 1

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
        if self.graph.file is None and self.graph.n < 1:
            raise ConfigError("graph.n must be >= 1")
        if not 0 <= self.graph.p <= 1:
            raise ConfigError("graph.p must lie in [0, 1]")
        c = self.costs
        for name in ("beta", "center", "x0"):
            v = getattr(c, name)
            if v is not None and self.graph.file is None and len(v) != self.graph.n:
                raise ConfigError(f"costs.{name} lists {len(v)} values for {self.graph.n} nodes")
        betas = c.beta if c.beta is not None else c.beta_set
        if not betas or min(betas) <= 0:
            raise ConfigError("[smooth strongly convex costs] every curvature beta must be positive")
        if c.x0 is None and c.x0_low > c.x0_high:
            raise ConfigError("costs.x0_low exceeds costs.x0_high")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


_OPT_FIELDS = {f.name for f in fields(OptimizerConfig)}
_OPT_INT = {"c_r", "n_bits", "max_outer_steps", "max_consensus_rounds"}
_OPT_BOOL = {"unsafe_alpha", "freeze_basis"}
_OPT_OPTIONAL_INT = {"patience", "message_bits"}


def _apply(cfg: ExperimentConfig, section: str, key: str, value: str) -> None:
    section, key, value = section.strip().lower(), key.strip().lower(), value.strip()
    try:
        if section == "experiment":
            if key == "algorithm":
                cfg.algorithm = value
            elif key == "seeds":
                cfg.seeds = parse_seeds(value)
            elif key == "out":
                cfg.out = Path(value)
            elif key == "trace":
                cfg.trace = _bool(value)
            elif key == "jobs":
                cfg.jobs = int(value)
            else:
                raise ConfigError(f"unknown key experiment.{key}")
        elif section == "graph":
            if key == "n":
                cfg.graph.n = int(value)
            elif key == "p":
                cfg.graph.p = float(value)
            elif key == "file":
                cfg.graph.file = value or None
            elif key == "seed":
                cfg.graph.seed = int(value) if value else None
            else:
                raise ConfigError(f"unknown key graph.{key}")
        elif section == "costs":
            if key in ("beta", "center", "x0"):
                setattr(cfg.costs, key, _rational_list(value) if value else None)
            elif key in ("beta_set", "center_set"):
                setattr(cfg.costs, key, _rational_list(value))
            elif key in ("x0_low", "x0_high"):
                setattr(cfg.costs, key, as_rational(value))
            else:
                raise ConfigError(f"unknown key costs.{key}")
        elif section == "optimizer":
            if key not in _OPT_FIELDS:
                raise ConfigError(f"unknown key optimizer.{key}")
            if key in _OPT_INT:
                parsed = int(value)
            elif key in _OPT_BOOL:
                parsed = _bool(value)
            elif key in _OPT_OPTIONAL_INT:
                parsed = int(value) if value and value.lower() != "none" else None
            elif key == "value_range":
                parsed = as_rational(value) if value and value.lower() != "none" else None
            elif key in ("eps_s1", "eps_s2"):
                parsed = value
            else:
                parsed = as_rational(value)
            setattr(cfg.optimizer, key, parsed)
        else:
            raise ConfigError(f"unknown section [{section}]")
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {value!r} ({exc})") from None


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read an INI file (optional) and apply ``section.key=value`` overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                _apply(cfg, section, key, value)
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        _apply(cfg, section, key, value)
    # rebuild so OptimizerConfig normalizes and checks overridden fields
    try:
        cfg.optimizer = OptimizerConfig(**{f.name: getattr(cfg.optimizer, f.name) for f in fields(OptimizerConfig)})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg
