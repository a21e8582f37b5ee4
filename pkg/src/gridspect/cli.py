"""Command-line front end: ``gridspect {generate,estimate,benchmark,inspect}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 estimator
failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import BUNDLED_CONFIGS, RunConfig, bundled_config_path, load_config
from .covariance import condition_number
from .evaluation import (
    ESTIMATOR_NAMES,
    condition_diagnostics,
    resolve_network,
    run_benchmark,
    run_covariance_sweep,
    score_estimator,
    sweep_trend,
    write_markdown,
)
from .exceptions import ConfigError, DataError, GridSpectError, NetworkError, NotNormalError
from .grid import build_admittance, check_constant_xr, normality_residual
from .io import read_dataset, read_estimate, read_network, sniff_kind, write_dataset, write_estimate, write_network
from .metrics import relative_frobenius_error
from .simulation import CurrentModel, center, generate_dataset

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATOR = 0, 1, 2, 3


class EstimatorFailure(GridSpectError):
    """Every requested estimator failed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _common(p):
    # accepted both before and after the subcommand
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")


def build_parser():
    parser = _Parser(prog="gridspect", description="Admittance-matrix identification from phasor data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a phasor dataset")
    _common(g)
    g.add_argument("--config", help="run config file")
    g.add_argument("--network", help="built-in network name or network file")
    g.add_argument("--N", type=int, help="number of samples")
    g.add_argument("--sigma-v", type=float, help="voltage noise (percent by default)")
    g.add_argument("--sigma-i", type=float, help="current noise (percent by default)")
    g.add_argument("--noise-mode", choices=("percent", "absolute"))
    g.add_argument("--current-sigma", type=float, help="per-bus injection std")
    g.add_argument("--slack-std", type=float, help="substation voltage fluctuation std")
    g.add_argument("--constant-xr", action="store_true", default=None, help="force x/r = 1 on every branch")
    g.add_argument("--no-shunts", action="store_true", help="drop shunt admittances")
    g.add_argument("--centered", action="store_true", default=None, help="store mean-removed samples")

    e = sub.add_parser("estimate", help="estimate Y from a dataset file")
    _common(e)
    e.add_argument("dataset", help="phasor dataset file")
    e.add_argument("--config", help="run config file (estimator selection and parameters)")
    e.add_argument("--truth", help="network file or built-in name to score against")
    e.add_argument("--estimator", help=f"one of {', '.join(ESTIMATOR_NAMES)}, a comma list, or 'all'")
    e.add_argument("--L", help="WCWF truncation (integer or 'n')")
    e.add_argument("--beta", type=float, help="MAP ridge weight")
    e.add_argument("--alpha", type=float, help="Lasso penalty")
    e.add_argument("--postfilter", action="store_true", help="project every estimate onto Laplacian structure")

    b = sub.add_parser("benchmark", help="run a benchmark suite from a config")
    _common(b)
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", help="suite config file")
    src.add_argument("--bundled", choices=BUNDLED_CONFIGS, help="use a config shipped with the package")
    b.add_argument("--dry-run", action="store_true", help="validate the config and list the cells only")
    b.add_argument("--replicates", type=int, help="override the number of seeds per cell")

    i = sub.add_parser("inspect", help="summarize a network, dataset or estimate file")
    _common(i)
    i.add_argument("path")
    i.add_argument("--truth", help="network to compare an estimate against")
    return parser


def _load(args):
    path = getattr(args, "config", None)
    if getattr(args, "bundled", None):
        path = bundled_config_path(args.bundled)
    cfg = load_config(path) if path else RunConfig()
    over = {"seed": getattr(args, "seed", None), "out": getattr(args, "out", None)}
    return cfg.with_overrides(**over)


def _out_dir(cfg):
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args):
    cfg = _load(args).with_overrides(
        network=args.network,
        N=args.N,
        sigma_v=args.sigma_v,
        sigma_i=args.sigma_i,
        noise_mode=args.noise_mode,
        current_sigma=args.current_sigma,
        slack_std=args.slack_std,
        constant_xr=args.constant_xr,
        centered=args.centered,
    )
    if args.no_shunts:
        cfg.shunts = False
    if cfg.N < 2 or not cfg.current_sigma > 0 or min(cfg.sigma_v, cfg.sigma_i, cfg.slack_std) < 0:
        raise ConfigError("need N >= 2, current_sigma > 0 and nonnegative noise levels")
    spec = resolve_network(cfg.network, constant_xr=cfg.constant_xr, shunts=cfg.shunts)
    Y = build_admittance(spec)
    model = CurrentModel(sigma=cfg.current_sigma, balanced=cfg.balanced)
    ds = generate_dataset(
        Y.entries,
        model,
        cfg.N,
        cfg.seed,
        sigma_v=cfg.sigma_v,
        sigma_i=cfg.sigma_i,
        noise_mode=cfg.noise_mode,
        slack_std=cfg.slack_std,
    )
    if cfg.centered:
        ds = center(ds)
    out = _out_dir(cfg)
    write_network(spec, out / "network.txt", [f"source: {cfg.network}"])
    write_dataset(ds, out / "dataset.txt")
    unit = "%" if cfg.noise_mode == "percent" else ""
    print(
        f"n={ds.n} N={ds.N} noise_v={cfg.sigma_v:g}{unit} noise_i={cfg.sigma_i:g}{unit} "
        f"(sigma_v={ds.sigma_v:.3e}, sigma_i={ds.sigma_i:.3e}) seed={cfg.seed}"
    )
    print(f"wrote {out / 'network.txt'} and {out / 'dataset.txt'}")
    return EXIT_OK


def _estimator_names(cfg, flag):
    if flag:
        names = [s.strip() for s in flag.split(",") if s.strip()]
        if names == ["all"]:
            return list(ESTIMATOR_NAMES)
        bad = [n for n in names if n not in ESTIMATOR_NAMES]
        if bad:
            raise ConfigError(f"unknown estimator(s) {bad}; choose from {list(ESTIMATOR_NAMES)} or 'all'")
        return names
    return list(cfg.estimators)


def cmd_estimate(args):
    cfg = _load(args)
    names = _estimator_names(cfg, args.estimator)
    L = None
    if args.L is not None:
        L = args.L if args.L == "n" else _int_arg("--L", args.L)
    ds = read_dataset(args.dataset)
    Y_true = None
    if args.truth:
        Y_true = build_admittance(resolve_network(args.truth)).entries
        if Y_true.shape[0] != ds.n:
            raise DataError(f"truth network has {Y_true.shape[0]} buses, dataset has {ds.n}")
    out = _out_dir(cfg)
    n_fail = 0
    for name in names:
        params = dict(cfg.estimator_params.get(name, {}))
        if name == "wcwf" and L is not None:
            params["L"] = L
        if name == "map_lambda" and args.beta is not None:
            params["beta"] = args.beta
        if name == "lasso" and args.alpha is not None:
            params["alpha"] = args.alpha
        if args.postfilter:
            params["postfilter"] = True
        truth = Y_true if Y_true is not None else np.eye(ds.n)
        rep = score_estimator(name, ds, truth, params, keep_estimate=True)
        if rep.failed:
            n_fail += 1
            print(f"{name}: FAILED {rep.error}")
            continue
        meta = dict(rep.config)
        meta["postfilter"] = bool(args.postfilter)
        meta["dataset"] = str(args.dataset)
        path = out / f"estimate_{name}.txt"
        write_estimate(rep.estimate, path, name, meta)
        parts = [f"{name}:"]
        if Y_true is not None:
            parts.append(f"eps_F={rep.epsilon_F:.6e}")
        parts.append(f"tau_s={rep.wall_time:.4f}")
        parts.append(f"kappa_XVL={rep.condition_diagnostics['kappa_XVL']:.3e}")
        if not rep.converged:
            parts.append("(not converged)")
        parts.append(f"-> {path}")
        print(" ".join(parts))
    if n_fail == len(names):
        raise EstimatorFailure(f"all {len(names)} estimator(s) failed")
    return EXIT_OK


def _int_arg(flag, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{flag} must be an integer or 'n', got {value!r}") from None


def cmd_benchmark(args):
    cfg = _load(args)
    if args.replicates is not None:
        if args.replicates < 1:
            raise ConfigError("--replicates must be >= 1")
        cfg.replicates = args.replicates
    if cfg.kind == "sweep":
        sc = cfg.sweep_config().validate()
        if args.dry_run:
            print(
                f"config OK: sweep of {sc.points} covariance points x {len(sc.variants)} variants "
                f"on {sc.network}, N={sc.N}, noise={sc.noise_pct:g}%, estimator={sc.estimator}"
            )
            return EXIT_OK
        out = _out_dir(cfg)
        points = run_covariance_sweep(sc, out)
        for v in sc.variants:
            print(f"{v}: spearman(dist_W, eps_F) = {sweep_trend(points, v):.3f}")
        print(f"wrote {out / 'sweep.csv'}")
        return EXIT_OK
    bc = cfg.benchmark_config().validate()
    cells = len(bc.networks) * len(bc.noise_pcts) * bc.replicates
    if args.dry_run:
        print(
            f"config OK: {cells} cells x {len(bc.estimators)} estimators "
            f"(networks={','.join(map(str, bc.networks))}; noise={','.join(f'{p:g}' for p in bc.noise_pcts)}%; "
            f"replicates={bc.replicates}; N={bc.N})"
        )
        return EXIT_OK
    out = _out_dir(cfg)
    reports = run_benchmark(bc, out)
    print(write_markdown(reports), end="")
    failed = sum(r.failed for r in reports)
    print(f"{len(reports)} runs, {failed} failed; wrote {out / 'benchmark.csv'} and {out / 'benchmark.md'}")
    return EXIT_OK


def cmd_inspect(args):
    kind = sniff_kind(args.path)
    if kind == "network":
        spec = read_network(args.path)
        Y = build_admittance(spec)
        xr = check_constant_xr(spec)
        print(f"network: n={spec.n} branches={spec.m} shunts={len(spec.shunts)}")
        print(f"symmetric={Y.is_symmetric} has_shunts={Y.has_shunts} normal={Y.is_normal}")
        print(f"normality residual={normality_residual(Y.entries):.3e}")
        if xr.constant:
            print(f"constant g/b ratio={xr.ratio:.6g}")
        else:
            print(f"g/b ratio not constant (max relative deviation {max(abs(v) for v in xr.deviations.values()):.3e})")
        print(f"kappa(Y)={condition_number(Y.entries):.3e}")
    elif kind == "dataset":
        ds = read_dataset(args.path)
        V = ds.V_meas - ds.V_meas.mean(1, keepdims=True)
        I = ds.I_meas - ds.I_meas.mean(1, keepdims=True)
        d = condition_diagnostics(V, I)
        print(f"dataset: n={ds.n} N={ds.N} sigma_v={ds.sigma_v:.3e} sigma_i={ds.sigma_i:.3e} seed={ds.seed}")
        print(
            f"kappa(Sigma_V)={d['kappa_sigma_V']:.3e} kappa(Sigma_I)={d['kappa_sigma_I']:.3e} "
            f"kappa(X_VL^H X_VL)={d['kappa_XVL']:.3e}"
        )
    else:
        Y, meta = read_estimate(args.path)
        sym = np.linalg.norm(Y - Y.T) / max(np.linalg.norm(Y), 1e-300)
        rows = np.linalg.norm(Y.sum(axis=1)) / max(np.linalg.norm(Y), 1e-300)
        print(f"estimate: n={Y.shape[0]} estimator={meta['estimator']}")
        for k, v in sorted(meta["config"].items()):
            print(f"  {k} = {v}")
        print(f"relative asymmetry={sym:.3e} relative row-sum norm={rows:.3e}")
        if args.truth:
            Y_true = build_admittance(resolve_network(args.truth)).entries
            print(f"eps_F={relative_frobenius_error(Y, Y_true):.6e}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "estimate": cmd_estimate, "benchmark": cmd_benchmark, "inspect": cmd_inspect}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimatorFailure as exc:
        print(f"estimator failure: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except (DataError, NetworkError, NotNormalError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
