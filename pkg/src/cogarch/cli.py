"""Command-line frontend.

Subcommands: simulate, embed, converge, fit, mc-study, synth.  Options can
come from flags or a flat `key = value` config file (flags win).  Exit codes:
0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as io_
from .embedding import convergence_study, embed, explicit_sigma_check, lift
from .estimation import FitConfig, FitError, WeightScheme, fit, fit_weighted
from .levy import Grid, LevySpec, extract_innovations, simulate_levy_path
from .montecarlo import (ASX_GAP_FREQUENCIES, EquallySpaced, FrequencyGrid,
                         StudyDesign, run_study)
from .simulate import CogarchParams, euler_oracle, simulate_exact

_SEED_ENV = "COGARCH_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argument problems are validation errors
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _resolved(args, keys) -> dict:
    return {k: repr(getattr(args, k)) for k in keys if hasattr(args, k)}


def _merge_config(args) -> None:
    """Fill unset (None) options from the config file, if one was given."""
    if not getattr(args, "config", None):
        return
    cfg = io_.read_config(args.config)
    for key, raw in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, raw)


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(os.environ.get(_SEED_ENV, "0"))


def _driver(args) -> LevySpec:
    kind = args.driver or "compound-poisson"
    rate = float(args.rate) if args.rate is not None else 1.0
    if kind == "pure-diffusion":
        return LevySpec.pure_diffusion()
    jump = args.jump_dist or "standard-normal"
    if jump != "standard-normal":
        from .levy import JumpDist
        dist_kind = "two-point" if jump == "two-point" else "normal"
        jump = JumpDist(dist_kind, float(args.jump_scale or 1.0))
    if kind == "jump-diffusion":
        return LevySpec.jump_diffusion(float(args.driver_sigma), rate, jump)
    return LevySpec.compound_poisson(rate, jump)


def _params(args) -> CogarchParams:
    for name in ("beta", "eta", "phi"):
        if getattr(args, name) is None:
            raise ValueError(f"--{name} is required (flag or config file)")
    sigma0 = float(args.sigma0) if getattr(args, "sigma0", None) is not None else None
    return CogarchParams(float(args.beta), float(args.eta), float(args.phi),
                         sigma0=sigma0)


def _grid(args) -> Grid:
    if args.horizon is None or args.n_cells is None:
        raise ValueError("--horizon and --n-cells are required")
    return Grid.uniform(float(args.horizon), int(args.n_cells))


def _add_driver_options(p):
    p.add_argument("--driver", choices=["compound-poisson", "jump-diffusion",
                                        "pure-diffusion"], default=None)
    p.add_argument("--rate", default=None, help="jump intensity per unit time")
    p.add_argument("--jump-dist", default=None,
                   choices=["standard-normal", "scaled-normal", "two-point"])
    p.add_argument("--jump-scale", default=None)
    p.add_argument("--driver-sigma", default=None,
                   help="Brownian scale for jump-diffusion drivers")


def _add_param_options(p):
    p.add_argument("--beta", default=None)
    p.add_argument("--eta", default=None)
    p.add_argument("--phi", default=None)
    p.add_argument("--sigma0", default=None,
                   help="initial variance (default: stationary mean)")


def _add_common(p):
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--seed", default=None,
                   help=f"master seed (default: ${_SEED_ENV} or 0)")


def cmd_simulate(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    spec = _driver(args)
    params = _params(args)
    grid = _grid(args)
    cfg = io_.config_hash(_resolved(args, ("driver", "rate", "jump_dist",
                                           "jump_scale", "driver_sigma", "beta",
                                           "eta", "phi", "sigma0", "horizon",
                                           "n_cells", "euler_step")) | {"seed": seed})
    ref = grid if spec.sigma > 0 else None
    path = simulate_levy_path(spec, grid.horizon, seed, grid=ref)
    exact = simulate_exact(path, params, grid)
    io_.write_path_csv(exact, args.out, seed=seed, cfg_hash=cfg)
    if args.returns_out:
        from .estimation import ReturnsSeries
        series = ReturnsSeries.from_path(exact, grid.times)
        io_.write_returns_csv(series, args.returns_out, seed=seed, cfg_hash=cfg)
    if args.euler_out:
        step = float(args.euler_step or 1e-3)
        oracle = euler_oracle(path, params, step, sample_times=grid)
        io_.write_path_csv(oracle, args.euler_out, seed=seed, cfg_hash=cfg)
    print(f"simulated {path.n_jumps} jumps over [0, {grid.horizon}] -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    spec = _driver(args)
    params = _params(args)
    grid = _grid(args)
    threshold = float(args.threshold) if args.threshold is not None else 0.0
    cfg = io_.config_hash(_resolved(args, ("driver", "rate", "beta", "eta",
                                           "phi", "sigma0", "horizon", "n_cells",
                                           "threshold")) | {"seed": seed})
    ref = grid if spec.sigma > 0 else None
    path = simulate_levy_path(spec, grid.horizon, seed, grid=ref)
    innovations = extract_innovations(path, grid, threshold, spec)
    series = embed(innovations, params, params.resolve_sigma0())
    deviation = explicit_sigma_check(series)

    lines = [f"# seed={seed} config={cfg}", "index,time,eps,G,sigma2"]
    eps = np.concatenate(([0.0], innovations.eps))
    for i, t in enumerate(grid.times):
        lines.append(f"{i},{t:.17g},{eps[i]:.17g},"
                     f"{series.G[i]:.17g},{series.sigma2[i]:.17g}")
    from pathlib import Path
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"explicit-representation max relative deviation: {deviation:.3e}")
    return 0


def cmd_converge(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    spec = _driver(args)
    params = _params(args)
    if args.horizon is None or args.resolutions is None:
        raise ValueError("--horizon and --resolutions are required")
    spacings = [float(x) for x in str(args.resolutions).split(",")]
    n_seeds = int(args.seeds or 16)
    cfg = io_.config_hash(_resolved(args, ("driver", "rate", "beta", "eta",
                                           "phi", "horizon", "resolutions",
                                           "seeds")) | {"seed": seed})
    report = convergence_study(spec, params, float(args.horizon), spacings,
                               n_seeds=n_seeds, master_seed=seed)
    io_.write_convergence_json(report, args.out, seed=seed, cfg_hash=cfg)
    if args.csv_out:
        io_.write_convergence_csv(report, args.csv_out, seed=seed, cfg_hash=cfg)
    verdict = "decreasing" if report.monotone else "NOT decreasing"
    print(f"median distance bound {verdict} along the ladder "
          f"({', '.join(f'{b:.4g}' for b in report.bound_median)})")
    return 0


def cmd_fit(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    series = io_.ingest(args.input, mode=args.data_mode or "returns")
    config = FitConfig(
        mode=args.mode or "exact",
        restarts=int(args.restarts or 10),
        xtol=float(args.xtol or 1e-14),
        seed=seed,
    )
    family = args.weights or "identity"
    cfg = io_.config_hash(_resolved(args, ("input", "data_mode", "mode",
                                           "weights", "restarts", "xtol",
                                           "annualize")) | {"seed": seed})
    if family == "identity":
        result = fit(series, config)
        scheme = WeightScheme("identity")
    else:
        weighted = fit_weighted(series, family, config)
        result, scheme = weighted.result, weighted.scheme
    annualize = float(args.annualize or 365.0)
    io_.write_fit_json(result, series, args.out, annualize=annualize,
                       seed=seed, cfg_hash=cfg, scheme=scheme)
    if args.vol_out and result.filtered_sigma2 is not None:
        io_.write_volatility_csv(series.times, result.filtered_sigma2,
                                 args.vol_out, annualize=annualize,
                                 seed=seed, cfg_hash=cfg)
    from .estimation import long_run_volatility
    lrv = long_run_volatility(result.params, annualize)
    print(f"estimates: beta={result.beta:.6g} eta={result.eta:.6g} "
          f"phi={result.phi:.6g}  logL={result.loglik:.2f}  "
          f"long-run vol={100 * lrv:.2f}%")
    return 0


def cmd_mc_study(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    spec = _driver(args)
    truth = _params(args)
    fit_config = FitConfig(
        mode=args.mode or "exact",
        restarts=int(args.restarts or 10),
        xtol=float(args.xtol or 1e-14),
        seed=seed,
    )
    grid_kind = args.grid or "equal"
    if grid_kind == "equal":
        grid = EquallySpaced(int(args.n_obs or 5000), float(args.dt or 1.0))
    elif grid_kind == "asx":
        grid = FrequencyGrid(ASX_GAP_FREQUENCIES)
    else:
        raise ValueError(f"unknown grid template {grid_kind!r}")
    design = StudyDesign(
        truth=truth, driver=spec, grid=grid,
        replications=int(args.replications or 200), seed=seed,
        fit_config=fit_config,
        burn_in=float(args.burn_in or 1000.0),
    )
    cfg = io_.config_hash(_resolved(args, ("driver", "rate", "beta", "eta",
                                           "phi", "grid", "n_obs", "dt",
                                           "replications", "mode", "restarts",
                                           "xtol", "burn_in")) | {"seed": seed})
    report = run_study(design)
    io_.write_study_json(report, args.out, seed=seed, cfg_hash=cfg)
    if args.raw_out:
        io_.write_study_raw_csv(report, args.raw_out, seed=seed, cfg_hash=cfg)
    print(report.table())
    return 0


def cmd_synth(args) -> int:
    _merge_config(args)
    seed = _seed(args)
    cfg = io_.config_hash({"seed": seed})
    series = io_.synthetic_asx_series(seed=seed)
    io_.write_returns_csv(series, args.out, seed=seed, cfg_hash=cfg)
    table = io_.frequency_table(series)
    print("gap frequencies: " + ", ".join(f"{int(d)}d x{c}" for d, c in table))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cogarch",
                     description="continuous-time GARCH toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="exact bivariate path on a grid")
    _add_common(p)
    _add_driver_options(p)
    _add_param_options(p)
    p.add_argument("--horizon", default=None)
    p.add_argument("--n-cells", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--returns-out", default=None)
    p.add_argument("--euler-out", default=None)
    p.add_argument("--euler-step", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("embed", help="discrete approximation on a grid")
    _add_common(p)
    _add_driver_options(p)
    _add_param_options(p)
    p.add_argument("--horizon", default=None)
    p.add_argument("--n-cells", default=None)
    p.add_argument("--threshold", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("converge", help="refinement-ladder distance study")
    _add_common(p)
    _add_driver_options(p)
    _add_param_options(p)
    p.add_argument("--horizon", default=None)
    p.add_argument("--resolutions", default=None,
                   help="comma-separated cell lengths, e.g. 1,0.5,0.25")
    p.add_argument("--seeds", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--csv-out", default=None)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("fit", help="PML fit of a returns file")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--data-mode", choices=["prices", "returns"], default=None)
    p.add_argument("--mode", choices=["exact", "first-order"], default=None)
    p.add_argument("--weights",
                   choices=["identity", "constant", "log", "per-dt"],
                   default=None)
    p.add_argument("--restarts", default=None)
    p.add_argument("--xtol", default=None)
    p.add_argument("--annualize", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--vol-out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("mc-study", help="replicated simulate-and-fit study")
    _add_common(p)
    _add_driver_options(p)
    _add_param_options(p)
    p.add_argument("--grid", choices=["equal", "asx"], default=None)
    p.add_argument("--n-obs", default=None)
    p.add_argument("--dt", default=None)
    p.add_argument("--replications", default=None)
    p.add_argument("--mode", choices=["exact", "first-order"], default=None)
    p.add_argument("--restarts", default=None)
    p.add_argument("--xtol", default=None)
    p.add_argument("--burn-in", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--raw-out", default=None)
    p.set_defaults(func=cmd_mc_study)

    p = sub.add_parser("synth", help="bundled synthetic daily-returns dataset")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FitError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
