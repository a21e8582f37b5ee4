"""INI-style run configuration.

Sections and keys (all optional; unknown ones are rejected)::

    [run]        seed, out
    [network]    source, constant_xr, shunts
    [data]       N, sigma_v, sigma_i, noise_mode, current_sigma, balanced, slack_std, centered
    [estimators] names
    [estimator.NAME]  any constructor parameter of that estimator, plus postfilter
    [benchmark]  kind (table | sweep), networks, noise_pct, replicates
    [sweep]      points, spread, variants, estimator

List values are comma separated.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .exceptions import ConfigError

__all__ = ["RunConfig", "load_config", "parse_config", "bundled_config_path", "BUNDLED_CONFIGS"]

BUNDLED_CONFIGS = ("paper-table1", "fig4")

_SCHEMA = {
    "run": {"seed", "out"},
    "network": {"source", "constant_xr", "shunts"},
    "data": {"N", "sigma_v", "sigma_i", "noise_mode", "current_sigma", "balanced", "slack_std", "centered"},
    "estimators": {"names"},
    "benchmark": {"kind", "networks", "noise_pct", "replicates"},
    "sweep": {"points", "spread", "variants", "estimator"},
}


@dataclass
class RunConfig:
    seed: int = 0
    out: Optional[str] = None
    network: str = "radial33"
    constant_xr: bool = False
    shunts: bool = True
    N: int = 10080
    sigma_v: float = 0.01
    sigma_i: float = 0.01
    noise_mode: str = "percent"
    current_sigma: float = 0.03
    balanced: bool = True
    slack_std: float = 0.005
    centered: bool = False
    estimators: Tuple[str, ...] = ("wcwf",)
    estimator_params: Dict[str, Dict[str, object]] = field(default_factory=dict)
    kind: str = "table"
    networks: Tuple[str, ...] = ("radial10", "radial33", "radial56")
    noise_pcts: Tuple[float, ...] = (0.01,)
    replicates: int = 1
    sweep_points: int = 10
    sweep_spread: float = 100.0
    sweep_variants: Tuple[str, ...] = ("constant_xr", "original")
    sweep_estimator: str = "map_lambda"
    source: Optional[str] = None

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def benchmark_config(self):
        from .evaluation import BenchmarkConfig

        return BenchmarkConfig(
            networks=list(self.networks),
            N=self.N,
            noise_pcts=list(self.noise_pcts),
            estimators=list(self.estimators),
            replicates=self.replicates,
            seed=self.seed,
            current_sigma=self.current_sigma,
            balanced=self.balanced,
            slack_std=self.slack_std,
            constant_xr=self.constant_xr,
            shunts=self.shunts,
            estimator_params={k: dict(v) for k, v in self.estimator_params.items()},
        )

    def sweep_config(self):
        from .evaluation import SweepConfig

        return SweepConfig(
            network=self.network,
            points=self.sweep_points,
            N=self.N,
            noise_pct=self.sigma_v,
            seed=self.seed,
            current_sigma=self.current_sigma,
            spread=self.sweep_spread,
            slack_std=self.slack_std,
            variants=tuple(self.sweep_variants),
            estimator=self.sweep_estimator,
            estimator_params=dict(self.estimator_params.get(self.sweep_estimator, {})),
        )


def bundled_config_path(name):
    """Path of a config shipped with the package (``paper-table1`` or ``fig4``)."""
    if name not in BUNDLED_CONFIGS:
        raise ConfigError(f"no bundled config {name!r}; available: {', '.join(BUNDLED_CONFIGS)}")
    return Path(str(resources.files("gridspect") / "data" / f"{name}.cfg"))


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    return parse_config(text, source=str(path))


def _split(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _scalar(text):
    """Best-effort typed value for estimator parameters."""
    low = text.strip().lower()
    if low in ("none", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text.strip()


def parse_config(text, source="<config>"):
    """Parse config text into a :class:`RunConfig`; errors name the section and key."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    cfg = RunConfig()
    where = ""

    def fail(msg):
        raise ConfigError(f"{source}: {where}: {msg}")

    for section in cp.sections():
        where = f"[{section}]"
        if section.startswith("estimator."):
            name = section.split(".", 1)[1]
            cfg.estimator_params[name] = {k: _scalar(v) for k, v in cp.items(section)}
            continue
        if section not in _SCHEMA:
            fail(f"unknown section; expected one of {sorted(_SCHEMA)} or estimator.NAME")
        unknown = set(cp[section]) - _SCHEMA[section]
        if unknown:
            fail(f"unknown key(s) {sorted(unknown)}")
        sec = cp[section]
        for key in sec:
            where = f"[{section}] {key}"
            try:
                _apply(cfg, section, key, sec, fail)
            except ValueError as exc:
                fail(str(exc))
    where = "config"
    _validate(cfg, fail)
    return cfg


def _apply(cfg, section, key, sec, fail):
    raw = sec[key]
    if section == "run":
        if key == "seed":
            cfg.seed = sec.getint(key)
        else:
            cfg.out = raw
    elif section == "network":
        if key == "source":
            cfg.network = raw.strip()
            cfg.source = raw.strip()
        else:
            setattr(cfg, key, sec.getboolean(key))
    elif section == "data":
        if key == "N":
            cfg.N = sec.getint(key)
        elif key in ("balanced", "centered"):
            setattr(cfg, key, sec.getboolean(key))
        elif key == "noise_mode":
            if raw not in ("percent", "absolute"):
                fail("must be 'percent' or 'absolute'")
            cfg.noise_mode = raw
        else:
            setattr(cfg, key, sec.getfloat(key))
    elif section == "estimators":
        cfg.estimators = _split(raw)
    elif section == "benchmark":
        if key == "kind":
            if raw not in ("table", "sweep"):
                fail("must be 'table' or 'sweep'")
            cfg.kind = raw
        elif key == "networks":
            cfg.networks = _split(raw)
        elif key == "noise_pct":
            cfg.noise_pcts = tuple(float(v) for v in _split(raw))
        else:
            cfg.replicates = sec.getint(key)
    elif section == "sweep":
        if key == "points":
            cfg.sweep_points = sec.getint(key)
        elif key == "spread":
            cfg.sweep_spread = sec.getfloat(key)
        elif key == "variants":
            cfg.sweep_variants = _split(raw)
        else:
            cfg.sweep_estimator = raw.strip()


def _validate(cfg, fail):
    from .evaluation import ESTIMATOR_NAMES

    if cfg.N < 2:
        fail(f"N must be >= 2, got {cfg.N}")
    for name in ("sigma_v", "sigma_i", "slack_std"):
        if getattr(cfg, name) < 0:
            fail(f"{name} must be >= 0")
    if not cfg.current_sigma > 0:
        fail("current_sigma must be > 0")
    if cfg.replicates < 1:
        fail("replicates must be >= 1")
    names: List[str] = list(cfg.estimators)
    if names == ["all"]:
        cfg.estimators = tuple(ESTIMATOR_NAMES)
        names = list(ESTIMATOR_NAMES)
    bad = [n for n in names + list(cfg.estimator_params) if n not in ESTIMATOR_NAMES]
    if bad:
        fail(f"unknown estimator(s) {bad}; choose from {list(ESTIMATOR_NAMES)}")
    if cfg.sweep_estimator not in ESTIMATOR_NAMES:
        fail(f"unknown sweep estimator {cfg.sweep_estimator!r}")
    from .estimators import ESTIMATORS
    from .evaluation import DEFAULT_NETWORKS

    for name, params in cfg.estimator_params.items():
        allowed = set(ESTIMATORS[name]().get_params()) | {"postfilter"}
        unknown = set(params) - allowed
        if unknown:
            fail(f"[estimator.{name}] has unknown parameter(s) {sorted(unknown)}")
    refs = list(cfg.networks) + ([cfg.source] if cfg.source is not None else [])
    for ref in refs:
        if ref not in DEFAULT_NETWORKS and not Path(ref).is_file():
            fail(f"network {ref!r} is neither a built-in network nor an existing file")
    bad = set(cfg.sweep_variants) - {"constant_xr", "original"}
    if bad:
        fail(f"unknown sweep variant(s) {sorted(bad)}")
