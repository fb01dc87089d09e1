"""Flat-file plumbing: CSV ingestion and export, key-value config files, and
a bundled generator for a synthetic irregularly spaced daily-returns dataset.

Floats are written with 17 significant digits so every CSV round-trips
float64 values bit-identically; no output carries timestamps, so re-running
with the same configuration reproduces files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .embedding import ConvergenceReport
from .estimation import FitResult, ReturnsSeries, long_run_volatility, transform_to_garch
from .levy import JumpDist, LevySpec, simulate_levy_path
from .montecarlo import ASX_GAP_FREQUENCIES, StudyReport
from .simulate import BivariatePath, CogarchParams, simulate_exact

__all__ = [
    "ingest",
    "frequency_table",
    "read_config",
    "config_hash",
    "spec_from_config",
    "write_path_csv",
    "write_returns_csv",
    "write_volatility_csv",
    "write_fit_json",
    "write_convergence_json",
    "write_convergence_csv",
    "write_study_json",
    "write_study_raw_csv",
    "synthetic_asx_series",
]

_F = "%.17g"  # lossless float64 formatting


def _fmt(x: float) -> str:
    return _F % x


def _header_line(seed, cfg_hash) -> str:
    return f"# seed={seed} config={cfg_hash}"


def ingest(source, mode: str = "returns") -> ReturnsSeries:
    """Read a `time,value` CSV into a returns series.

    In "prices" mode the values are index levels and returns are differences
    of logs.  In "returns" mode the values are returns themselves; the first
    row anchors the series start and its value column is ignored.  Comment
    lines starting with '#' are skipped; parse failures report line numbers.
    """
    if mode not in ("prices", "returns"):
        raise ValueError(f"unknown ingest mode {mode!r}")
    lines = Path(source).read_text().splitlines()
    times, values = [], []
    saw_header = False
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if not saw_header:
            if [c.strip().lower() for c in text.split(",")] != ["time", "value"]:
                raise ValueError(f"line {number}: expected header 'time,value'")
            saw_header = True
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {number}: expected two columns")
        try:
            t, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"line {number}: non-numeric row {text!r}") from None
        if math.isnan(t) or math.isnan(v):
            raise ValueError(f"line {number}: NaN value")
        if times:
            if t == times[-1]:
                raise ValueError(f"line {number}: duplicate timestamp {parts[0]}")
            if t < times[-1]:
                raise ValueError(f"line {number}: non-increasing time {parts[0]}")
        times.append(t)
        values.append(v)
    if len(times) < 4:
        raise ValueError("need at least 4 data rows")
    times = np.asarray(times)
    values = np.asarray(values)
    if mode == "prices":
        if np.any(values <= 0):
            raise ValueError("price levels must be positive")
        return ReturnsSeries(times - times[0], np.diff(np.log(values)))
    return ReturnsSeries(times - times[0], values[1:])


def frequency_table(series: ReturnsSeries):
    """Distinct inter-observation spacings with counts, ascending."""
    values, counts = np.unique(series.spacings, return_counts=True)
    return [(float(v), int(c)) for v, c in zip(values, counts)]


def read_config(source) -> dict:
    """Flat `key = value` config file; '#' starts a comment."""
    out = {}
    for number, line in enumerate(Path(source).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValueError(f"line {number}: expected 'key = value'")
        key, value = text.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_hash(resolved: dict) -> str:
    payload = "".join(f"{k}={resolved[k]}\n" for k in sorted(resolved))
    return "sha256:" + hashlib.sha256(payload.encode()).hexdigest()[:16]


def spec_from_config(cfg: dict) -> LevySpec:
    """Build a driver from config keys kind / rate / jump_dist / sigma."""
    kind = cfg.get("kind", "compound-poisson")
    if kind == "pure-diffusion":
        return LevySpec.pure_diffusion()
    rate = float(cfg.get("rate", 1.0))
    jump = cfg.get("jump_dist", "standard-normal")
    if jump == "two-point":
        jump = JumpDist("two-point", float(cfg.get("jump_scale", 1.0)))
    elif jump == "scaled-normal":
        jump = JumpDist("normal", float(cfg.get("jump_scale", 1.0)))
    if kind == "jump-diffusion":
        return LevySpec.jump_diffusion(float(cfg["sigma"]), rate, jump)
    if kind == "compound-poisson":
        return LevySpec.compound_poisson(rate, jump)
    raise ValueError(f"unknown driver kind {kind!r}")


def write_path_csv(path: BivariatePath, dest, seed=None, cfg_hash="") -> None:
    lines = [_header_line(seed, cfg_hash), "time,G,sigma2,flavor"]
    for t, g, s2 in zip(path.times, path.G, path.sigma2):
        lines.append(f"{_fmt(t)},{_fmt(g)},{_fmt(s2)},{path.flavor}")
    Path(dest).write_text("\n".join(lines) + "\n")


def write_returns_csv(series: ReturnsSeries, dest, seed=None, cfg_hash="") -> None:
    """Returns CSV re-readable by ingest(mode="returns"); the first data row
    anchors the start time with a zero value."""
    lines = [_header_line(seed, cfg_hash), "time,value", f"{_fmt(series.times[0])},0"]
    for t, y in zip(series.times[1:], series.returns):
        lines.append(f"{_fmt(t)},{_fmt(y)}")
    Path(dest).write_text("\n".join(lines) + "\n")


def write_volatility_csv(times, sigma2, dest, annualize: float = 365.0,
                         seed=None, cfg_hash="") -> None:
    lines = [_header_line(seed, cfg_hash), "time,sigma2_hat,annualized_vol"]
    for t, s2 in zip(times, sigma2):
        lines.append(f"{_fmt(t)},{_fmt(s2)},{_fmt(math.sqrt(annualize * s2))}")
    Path(dest).write_text("\n".join(lines) + "\n")


def _json_dump(payload: dict, dest) -> None:
    Path(dest).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_fit_json(result: FitResult, series: ReturnsSeries, dest,
                   annualize: float = 365.0, seed=None, cfg_hash="",
                   scheme=None) -> None:
    """Fit report: estimates, errors, likelihood, flags, and the implied
    discrete GARCH parameters for every distinct spacing."""
    params = result.params
    transforms = {}
    for dt, _count in frequency_table(series):
        vol, theta, kappa = transform_to_garch(params, dt, annualize=annualize)
        transforms[_fmt(dt)] = {"annualized_omega_vol": vol, "theta": theta,
                                "kappa": kappa}
    payload = {
        "seed": seed,
        "config": cfg_hash,
        "estimates": result.estimates(),
        "std_errors": result.std_errors,
        "loglik": result.loglik,
        "annualized_beta_vol": math.sqrt(annualize * result.beta),
        "long_run_volatility": long_run_volatility(params, annualize),
        "stationary": result.stationary,
        "hit_floor": result.hit_floor,
        "converged": result.converged,
        "restarts": result.restarts,
        "iterations": result.iterations,
        "mode": result.mode,
        "n_obs": series.n_obs,
        "garch_transforms": transforms,
    }
    if scheme is not None:
        payload["weight_scheme"] = {"kind": scheme.kind, "gamma": scheme.gamma,
                                    "multipliers": list(scheme.multipliers)}
    _json_dump(payload, dest)


def write_convergence_json(report: ConvergenceReport, dest, seed=None,
                           cfg_hash="") -> None:
    payload = {
        "seed": seed,
        "config": cfg_hash,
        "monotone": report.monotone,
        "levels": report.rows(),
        "n_seeds": len(report.seeds),
    }
    _json_dump(payload, dest)


def write_convergence_csv(report: ConvergenceReport, dest, seed=None,
                          cfg_hash="") -> None:
    lines = [_header_line(seed, cfg_hash),
             "resolution,supG_median,supSigma_median,bound_median"]
    for row in report.rows():
        lines.append(",".join(_fmt(row[k]) for k in
                              ("resolution", "sup_level_median",
                               "sup_sigma2_median", "bound_median")))
    Path(dest).write_text("\n".join(lines) + "\n")


def write_study_json(report: StudyReport, dest, seed=None, cfg_hash="") -> None:
    payload = {
        "seed": seed,
        "config": cfg_hash,
        "truth": report.truth,
        "replications": report.replications,
        "failures": report.failures,
        "metrics": {
            name: {"mean": m.mean, "bias": m.bias, "mae": m.mae,
                   "rmse": m.rmse, "rel_rmse": m.rel_rmse}
            for name, m in report.metrics.items()
        },
    }
    _json_dump(payload, dest)


def write_study_raw_csv(report: StudyReport, dest, seed=None, cfg_hash="") -> None:
    lines = [_header_line(seed, cfg_hash), "replication,beta,eta,phi"]
    for i, row in enumerate(report.raw):
        lines.append(f"{i}," + ",".join(_fmt(v) for v in row))
    Path(dest).write_text("\n".join(lines) + "\n")


# Parameters in the ballpark of a fitted daily stock-index series: tiny beta
# (daily variance scale), slow mean reversion, stationary.
_ASX_LIKE_PARAMS = CogarchParams(beta=0.0237**2 / 365, eta=0.0847, phi=0.0685)


def synthetic_asx_series(seed: int = 0, params: CogarchParams | None = None,
                         rate: float = 1.0, burn_in: float = 1000.0) -> ReturnsSeries:
    """Synthetic stand-in for a daily stock-index return series.

    Reproduces the gap-frequency structure of a decade of once-per-trading-
    day observations (weekends and holidays) and simulates the returns from
    an exact path at index-like parameter values.  Deterministic in `seed`.
    """
    params = params if params is not None else _ASX_LIKE_PARAMS
    root = np.random.SeedSequence(seed)
    order_stream, path_stream = root.spawn(2)
    gaps = np.concatenate([np.full(c, g) for g, c in ASX_GAP_FREQUENCIES])
    gaps = np.random.default_rng(order_stream).permutation(gaps)
    obs_times = burn_in + np.concatenate(([0.0], np.cumsum(gaps)))
    spec = LevySpec.compound_poisson(rate)
    path_seed = int(path_stream.generate_state(1)[0])
    path = simulate_levy_path(spec, float(obs_times[-1]), path_seed)
    exact = simulate_exact(path, params, obs_times)
    return ReturnsSeries.from_path(exact, obs_times)
