"""Scenario builders, single-run scoring and the benchmark harness.

A benchmark *cell* is one (network, noise level, replicate) triple. All
estimators in a cell see the same dataset, whose seed is derived from the
master seed and the cell index, so reports do not depend on execution
order. Only the ``tau_s`` column varies between identical runs.
"""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr
from sklearn.exceptions import ConvergenceWarning

from .covariance import condition_number, joint_covariance, sample_covariance, truncated_eigenbasis
from .exceptions import ConfigError, GridSpectError, NetworkError
from .grid import NetworkSpec, build_admittance, make_constant_xr, random_radial_network, spectral_decompose
from .metrics import dist_w, relative_frobenius_error
from .simulation import CurrentModel, derive_seed, generate_dataset

__all__ = [
    "CSV_COLUMNS",
    "DEFAULT_NETWORKS",
    "ILLCONDITIONING_SLACK_STD",
    "BenchmarkConfig",
    "EstimationReport",
    "SweepConfig",
    "SweepPoint",
    "build_illconditioning_scenario",
    "condition_diagnostics",
    "default_network",
    "make_estimator",
    "resolve_network",
    "run_benchmark",
    "run_covariance_sweep",
    "score_estimator",
    "summarize",
    "sweep_covariances",
    "sweep_trend",
    "write_csv",
    "write_markdown",
    "write_sweep_csv",
]

CSV_COLUMNS = (
    "network",
    "n",
    "N",
    "noise_pct",
    "estimator",
    "seed",
    "eps_F",
    "tau_s",
    "kappa_sigma_V",
    "kappa_sigma_I",
    "kappa_XVL",
    "converged",
)

# name -> (bus count, generator seed)
DEFAULT_NETWORKS = {"radial10": (10, 10), "radial33": (33, 33), "radial56": (56, 56)}

ESTIMATOR_NAMES = ("ols", "lasso", "wiener", "wcwf", "map_lambda", "constrained_ls")


@dataclass
class EstimationReport:
    """Outcome of one estimator on one dataset.

    ``epsilon_F`` is NaN and ``error`` holds the diagnostic when the
    estimator raised.
    """

    estimator: str
    network: str
    n: int
    N: int
    noise_pct: float
    seed: int
    epsilon_F: float
    wall_time: float
    condition_diagnostics: Dict[str, float] = field(default_factory=dict)
    converged: bool = True
    error: Optional[str] = None
    config: Dict[str, object] = field(default_factory=dict)
    estimate: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.error is None and not (math.isfinite(self.epsilon_F) and self.epsilon_F >= 0):
            raise ValueError(f"epsilon_F must be finite and >= 0, got {self.epsilon_F}")

    @property
    def failed(self):
        return self.error is not None

    def row(self):
        d = self.condition_diagnostics
        return {
            "network": self.network,
            "n": self.n,
            "N": self.N,
            "noise_pct": _fmt(self.noise_pct),
            "estimator": self.estimator,
            "seed": self.seed,
            "eps_F": "nan" if self.failed else _fmt(self.epsilon_F),
            "tau_s": f"{self.wall_time:.6f}",
            "kappa_sigma_V": _fmt(d.get("kappa_sigma_V", math.nan)),
            "kappa_sigma_I": _fmt(d.get("kappa_sigma_I", math.nan)),
            "kappa_XVL": _fmt(d.get("kappa_XVL", math.nan)),
            "converged": "fail" if self.failed else int(bool(self.converged)),
        }


def _fmt(x):
    return repr(float(x))


def default_network(name):
    """One of the seeded random radial feeders ``radial10``, ``radial33``, ``radial56``."""
    try:
        n, seed = DEFAULT_NETWORKS[name]
    except KeyError:
        raise NetworkError(f"unknown built-in network {name!r}; choose from {sorted(DEFAULT_NETWORKS)}")
    return random_radial_network(n, seed=seed)


def resolve_network(ref, constant_xr=False, shunts=True):
    """Turn a built-in name, a file path or a :class:`NetworkSpec` into a spec."""
    if isinstance(ref, NetworkSpec):
        spec = ref
    elif str(ref) in DEFAULT_NETWORKS:
        spec = default_network(str(ref))
    else:
        from .io import read_network

        spec = read_network(ref)
    if not shunts:
        spec = spec.without_shunts()
    if constant_xr:
        spec = make_constant_xr(spec)
    return spec


# substation voltage fluctuation to simulate the ill-conditioning scenarios with
ILLCONDITIONING_SLACK_STD = 0.01


def build_illconditioning_scenario(loading):
    """Three-bus star with hub bus 0, the two-branch situation where ``Sigma_V`` degenerates.

    ``loading`` is ``'similar'`` (equal branch impedances, injections at
    the two leaves correlated at 0.9999), ``'light'`` (injections small
    enough that voltage drops stay around 1e-6 of nominal) or
    ``'baseline'`` (unequal impedances, independent injections) for
    comparison. The hub carries a stiff shunt standing in for the upstream
    grid, which keeps ``Y`` invertible and well conditioned, so the
    degeneracy comes from the data alone. Simulate with
    ``slack_std=ILLCONDITIONING_SLACK_STD``: under light load the common
    substation fluctuation then swamps every voltage difference.
    """
    hub_shunt = ((0, 1.0 + 1.0j),)
    z_unequal = (0.3 + 0.5j, 0.6 + 0.2j)
    sigma = 0.05
    if loading == "similar":
        z = (z_unequal[0], z_unequal[0])
        rho = 0.9999
        # rows: hub, then the two leaves sharing one dominant factor
        coloring = sigma * np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, rho, math.sqrt(1 - rho * rho)]])
        model = CurrentModel(kind="colored", coloring=coloring)
    elif loading == "light":
        z = z_unequal
        model = CurrentModel(sigma=5e-7)
    elif loading == "baseline":
        z = z_unequal
        model = CurrentModel(sigma=sigma)
    else:
        raise ValueError(f"loading must be 'similar', 'light' or 'baseline', got {loading!r}")
    spec = NetworkSpec(3, ((0, 1, 1.0 / z[0]), (0, 2, 1.0 / z[1])), hub_shunt)
    return spec, model


def condition_diagnostics(V, I, L=None):
    """Condition numbers of the matrices each estimator family inverts."""
    jc = joint_covariance(I, V)
    n = jc.n
    L = n if L is None else L
    tb = truncated_eigenbasis(jc, L)
    return {
        "kappa_sigma_V": condition_number(jc.sigma_V),
        "kappa_sigma_I": condition_number(jc.sigma_I),
        "kappa_XVL": condition_number(tb.X_VL.conj().T @ tb.X_VL),
    }


def make_estimator(name, params=None, n=None, sigma_v=0.0, sigma_i=0.0):
    """Instantiate an estimator by registry name with optional parameter overrides.

    ``params['L']`` may be the string ``'n'``; ``params['postfilter']``
    wraps the estimator in :class:`~gridspect.estimators.Postfiltered`.
    """
    from .estimators import ESTIMATORS, Postfiltered

    params = dict(params or {})
    post = bool(params.pop("postfilter", False))
    if name not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
    if name == "wcwf" and str(params.get("L", "")).strip() == "n":
        params["L"] = n
    if name == "map_lambda":
        params.setdefault("sigma_v", sigma_v)
        params.setdefault("sigma_i", sigma_i)
    est_cls = ESTIMATORS[name]
    unknown = set(params) - set(est_cls().get_params())
    if unknown:
        raise ConfigError(f"estimator {name!r} has no parameter(s) {sorted(unknown)}")
    est = est_cls(**params)
    return Postfiltered(est) if post else est


def score_estimator(
    name,
    dataset,
    Y_true,
    params=None,
    network="",
    noise_pct=math.nan,
    diagnostics=None,
    keep_estimate=False,
):
    """Fit one estimator, time the fit alone and score it against ``Y_true``.

    Library errors, including parameters invalid for this dataset (such as
    a truncation order above ``2n``), are captured in the report rather
    than raised.
    """
    V, I = dataset.V_meas, dataset.I_meas
    n, N = V.shape
    est = make_estimator(name, params, n=n, sigma_v=dataset.sigma_v, sigma_i=dataset.sigma_i)
    cfg = {k: v for k, v in est.get_params(deep=False).items() if not isinstance(v, np.ndarray)}
    if diagnostics is None:
        diagnostics = condition_diagnostics(V - V.mean(1, keepdims=True), I - I.mean(1, keepdims=True))
    common = dict(
        estimator=name,
        network=network,
        n=n,
        N=N,
        noise_pct=noise_pct,
        seed=dataset.seed,
        condition_diagnostics=diagnostics,
        config={k: (v if isinstance(v, (int, float, str, bool, type(None))) else repr(v)) for k, v in cfg.items()},
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        t0 = time.perf_counter()
        try:
            est.fit(V.T, I.T)
        except (GridSpectError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
            elapsed = time.perf_counter() - t0
            return EstimationReport(
                epsilon_F=math.nan, wall_time=elapsed, converged=False, error=f"{type(exc).__name__}: {exc}", **common
            )
        elapsed = time.perf_counter() - t0
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    Y_hat = est.admittance_
    return EstimationReport(
        epsilon_F=relative_frobenius_error(Y_hat, Y_true),
        wall_time=elapsed,
        converged=converged,
        estimate=Y_hat if keep_estimate else None,
        **common,
    )


@dataclass
class BenchmarkConfig:
    """Everything :func:`run_benchmark` needs; see the bundled configs for examples."""

    networks: Sequence[object] = ("radial10", "radial33", "radial56")
    N: int = 10080
    noise_pcts: Sequence[float] = (0.01,)
    estimators: Sequence[str] = ("ols", "lasso", "wcwf", "map_lambda")
    replicates: int = 1
    seed: int = 0
    current_sigma: float = 0.03
    balanced: bool = True
    slack_std: float = 0.005
    constant_xr: bool = False
    shunts: bool = True
    estimator_params: Dict[str, Dict[str, object]] = field(default_factory=dict)

    def validate(self):
        if not self.networks:
            raise ConfigError("no networks given")
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}")
        if any(not (p >= 0 and math.isfinite(p)) for p in self.noise_pcts):
            raise ConfigError("noise levels must be finite and >= 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.current_sigma > 0:
            raise ConfigError("current_sigma must be > 0")
        if self.slack_std < 0:
            raise ConfigError("slack_std must be >= 0")
        bad = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimator(s) {bad}; choose from {list(ESTIMATOR_NAMES)}")
        bad = set(self.estimator_params) - set(ESTIMATOR_NAMES)
        if bad:
            raise ConfigError(f"parameters given for unknown estimator(s) {sorted(bad)}")
        return self


def _network_label(ref):
    if isinstance(ref, NetworkSpec):
        return f"custom{ref.n}"
    s = str(ref)
    return s if s in DEFAULT_NETWORKS else Path(s).stem


def run_benchmark(config, out_dir=None):
    """Run every (network, noise level, replicate, estimator) combination.

    Returns the per-run reports. With ``out_dir`` set, also writes
    ``benchmark.csv`` and ``benchmark.md`` there.
    """
    config.validate()
    reports: List[EstimationReport] = []
    cell = 0
    for ref in config.networks:
        spec = resolve_network(ref, constant_xr=config.constant_xr, shunts=config.shunts)
        label = _network_label(ref)
        Y = build_admittance(spec).entries
        model = CurrentModel(sigma=config.current_sigma, balanced=config.balanced)
        for noise in config.noise_pcts:
            for _ in range(config.replicates):
                seed = derive_seed(config.seed, cell)
                cell += 1
                ds = generate_dataset(
                    Y, model, config.N, seed, sigma_v=noise, sigma_i=noise, slack_std=config.slack_std
                )
                V = ds.V_meas - ds.V_meas.mean(1, keepdims=True)
                I = ds.I_meas - ds.I_meas.mean(1, keepdims=True)
                diag = condition_diagnostics(V, I)
                for name in config.estimators:
                    reports.append(
                        score_estimator(
                            name,
                            ds,
                            Y,
                            config.estimator_params.get(name),
                            network=label,
                            noise_pct=noise,
                            diagnostics=diag,
                        )
                    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(reports, out / "benchmark.csv")
        write_markdown(reports, out / "benchmark.md")
    return reports


def write_csv(reports, path=None):
    """Write reports as CSV; returns the text when ``path`` is None."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    text = buf.getvalue()
    if path is None:
        return text
    Path(path).write_text(text)
    return None


def summarize(reports):
    """Mean and std over replicates, keyed by (network, n, N, noise_pct, estimator).

    Failed runs are counted but excluded from the statistics.
    """
    groups: Dict[tuple, List[EstimationReport]] = {}
    for r in reports:
        groups.setdefault((r.network, r.n, r.N, r.noise_pct, r.estimator), []).append(r)
    out = {}
    for key, rs in groups.items():
        ok = [r for r in rs if not r.failed]
        eps = np.array([r.epsilon_F for r in ok])
        tau = np.array([r.wall_time for r in ok])
        kap = {
            k: float(np.mean([r.condition_diagnostics.get(k, math.nan) for r in rs]))
            for k in ("kappa_sigma_V", "kappa_sigma_I", "kappa_XVL")
        }
        out[key] = {
            "runs": len(rs),
            "failures": len(rs) - len(ok),
            "eps_mean": float(eps.mean()) if ok else math.nan,
            "eps_std": float(eps.std()) if ok else math.nan,
            "tau_mean": float(tau.mean()) if ok else math.nan,
            "tau_std": float(tau.std()) if ok else math.nan,
            "nonconverged": sum(1 for r in ok if not r.converged),
            **kap,
        }
    return out


def write_markdown(reports, path=None):
    """Accuracy/time table and conditioning table in Markdown."""
    summ = summarize(reports)
    lines = ["## Accuracy and computation time", ""]
    lines.append("| network | n | N | noise % | estimator | eps_F % (mean ± std) | tau s (mean ± std) | runs | failed |")
    lines.append("|---|---|---|---|---|---|---|---|---|")
    for (net, n, N, noise, est), s in summ.items():
        if s["failures"] == s["runs"]:
            acc, tau = "failed", "-"
        else:
            acc = f"{100 * s['eps_mean']:.3g} ± {100 * s['eps_std']:.2g}"
            tau = f"{s['tau_mean']:.3g} ± {s['tau_std']:.2g}"
            if s["nonconverged"]:
                acc += " (nc)"
        lines.append(f"| {net} | {n} | {N} | {noise:g} | {est} | {acc} | {tau} | {s['runs']} | {s['failures']} |")
    lines += ["", "## Condition numbers of inverted matrices", ""]
    lines.append("| network | n | noise % | kappa(Sigma_V) | kappa(Sigma_I) | kappa(X_VL^H X_VL) |")
    lines.append("|---|---|---|---|---|---|")
    seen = set()
    for (net, n, N, noise, _), s in summ.items():
        if (net, noise) in seen:
            continue
        seen.add((net, noise))
        lines.append(
            f"| {net} | {n} | {noise:g} | {s['kappa_sigma_V']:.3e} | {s['kappa_sigma_I']:.3e} | {s['kappa_XVL']:.3e} |"
        )
    text = "\n".join(lines) + "\n"
    if path is None:
        return text
    Path(path).write_text(text)
    return None


# ---------------------------------------------------------------------------
# current-covariance sweep


@dataclass
class SweepConfig:
    """Sweep of the injection covariance from white toward a heterogeneous diagonal.

    Point ``t`` in ``[0, 1]`` uses per-bus variances
    ``(1 - t) * s^2 + t * s^2 * h`` with ``h`` log-uniform in
    ``[1/spread, spread]`` (seeded by ``seed``) and normalized to mean 1.
    Every point reuses the same random draws.
    """

    network: object = "radial33"
    points: int = 10
    N: int = 10080
    noise_pct: float = 0.01
    seed: int = 0
    current_sigma: float = 0.03
    spread: float = 100.0
    slack_std: float = 0.005
    variants: Sequence[str] = ("constant_xr", "original")
    estimator: str = "map_lambda"
    estimator_params: Dict[str, object] = field(default_factory=dict)

    def validate(self):
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}")
        if not self.spread >= 1:
            raise ConfigError("spread must be >= 1")
        bad = set(self.variants) - {"constant_xr", "original"}
        if bad or not self.variants:
            raise ConfigError(f"unknown sweep variant(s) {sorted(bad)}")
        if self.estimator not in ESTIMATOR_NAMES:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        return self


@dataclass
class SweepPoint:
    variant: str
    t: float
    dist_W: float
    report: EstimationReport


def sweep_covariances(n, points, spread, seed, sigma=1.0):
    """Per-bus std vectors for the sweep, white first."""
    rng = np.random.default_rng(derive_seed(seed, 7))
    h = np.exp(rng.uniform(-np.log(spread), np.log(spread), n))
    h = h / h.mean()
    ts = np.linspace(0.0, 1.0, points)
    return ts, [sigma * np.sqrt((1 - t) + t * h) for t in ts]


def run_covariance_sweep(config, out_dir=None):
    """MAP-style bias versus how far the injection covariance is from commuting with ``Y``.

    ``dist_W`` is measured on the population covariance of the balanced
    injections in the eigenbasis of the constant-x/r network, for both
    variants (the original network has no unitary eigenbasis). Shunts are
    removed so the constant-x/r variant is normal. Returns a list of
    :class:`SweepPoint`.
    """
    config.validate()
    out: List[SweepPoint] = []
    base = resolve_network(config.network, shunts=False)
    label = _network_label(config.network)
    W_ref = spectral_decompose(build_admittance(make_constant_xr(base)).entries).W
    for variant in config.variants:
        spec = make_constant_xr(base) if variant == "constant_xr" else base
        Y = build_admittance(spec).entries
        ts, stds = sweep_covariances(spec.n, config.points, config.spread, config.seed, config.current_sigma)
        for t, s in zip(ts, stds):
            model = CurrentModel(sigma=s, balanced=True)
            ds = generate_dataset(
                Y,
                model,
                config.N,
                config.seed,
                sigma_v=config.noise_pct,
                sigma_i=config.noise_pct,
                slack_std=config.slack_std,
            )
            rep = score_estimator(
                config.estimator,
                ds,
                Y,
                config.estimator_params,
                network=f"{label}-{variant}",
                noise_pct=config.noise_pct,
            )
            out.append(SweepPoint(variant, float(t), dist_w(model.covariance(spec.n), W_ref), rep))
    if out_dir is not None:
        p = Path(out_dir)
        p.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out, p / "sweep.csv")
    return out


SWEEP_COLUMNS = ("network", "variant", "n", "N", "noise_pct", "t", "dist_W", "estimator", "seed", "eps_F", "converged")


def write_sweep_csv(points, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for p in points:
        r = p.report
        w.writerow(
            [
                r.network,
                p.variant,
                r.n,
                r.N,
                _fmt(r.noise_pct),
                _fmt(p.t),
                _fmt(p.dist_W),
                r.estimator,
                r.seed,
                "nan" if r.failed else _fmt(r.epsilon_F),
                "fail" if r.failed else int(r.converged),
            ]
        )
    text = buf.getvalue()
    if path is None:
        return text
    Path(path).write_text(text)
    return None


def sweep_trend(points, variant="constant_xr"):
    """Spearman correlation between ``dist_W`` and ``eps_F`` for one variant."""
    sel = [p for p in points if p.variant == variant and not p.report.failed]
    if len(sel) < 2:
        return math.nan
    rho = spearmanr([p.dist_W for p in sel], [p.report.epsilon_F for p in sel]).statistic
    return float(rho)

