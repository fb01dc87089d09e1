"""Pseudo-maximum-likelihood estimation of (beta, eta, phi) from irregularly
spaced returns.

The returns are treated as conditionally Gaussian with a one-step conditional
variance driven by a GARCH-type recursion over the (possibly reweighted)
inter-observation spacings.  Optimization runs a multi-start Nelder-Mead in
log-parameter space, with an -inf sentinel enforcing positivity and the
stationarity constraint eta > phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import pml_loglik
from .simplex import axis_simplex, nelder_mead
from .simulate import BivariatePath, CogarchParams

__all__ = [
    "FitError",
    "ReturnsSeries",
    "WeightScheme",
    "FitConfig",
    "FitResult",
    "WeightedFit",
    "weight_apply",
    "conditional_variance",
    "volatility_recursion",
    "pseudo_log_likelihood",
    "fit",
    "fit_weighted",
    "filter_volatility",
    "transform_to_garch",
    "long_run_volatility",
]


class FitError(RuntimeError):
    """Raised when no restart produces a finite pseudo-likelihood."""


@dataclass(frozen=True)
class ReturnsSeries:
    """Observed increments of the level process on a strictly increasing clock."""

    times: np.ndarray  # N+1 observation times, starting at 0
    returns: np.ndarray  # N increments

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rets = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "returns", rets)
        if times.ndim != 1 or rets.ndim != 1 or times.size != rets.size + 1:
            raise ValueError("need N+1 times for N returns")
        if rets.size < 3:
            raise ValueError("need more observations than parameters")
        if np.any(np.diff(times) <= 0):
            raise ValueError("observation times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(rets))):
            raise ValueError("times and returns must be finite")

    @classmethod
    def from_levels(cls, times, levels) -> "ReturnsSeries":
        times = np.asarray(times, dtype=float)
        levels = np.asarray(levels, dtype=float)
        return cls(times - times[0], np.diff(levels))

    @classmethod
    def from_path(cls, path: BivariatePath, times) -> "ReturnsSeries":
        """Sample an exact path at the given absolute times."""
        times = np.asarray(times, dtype=float)
        levels = path.level_at(times)
        return cls.from_levels(times, levels)

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def n_obs(self) -> int:
        return self.returns.size


@dataclass(frozen=True)
class WeightScheme:
    """Reweighting of the inter-observation spacings, constrained to keep
    the total observation span unchanged.

    Kinds: "identity" (use the spacings as they are), "constant" (every gap
    carries T/N), "log" (gamma * log(dt) + c(gamma) with c pinned by the
    span constraint), "per-dt" (one multiplier per distinct spacing value).
    """

    kind: str
    gamma: float = 0.0
    multipliers: tuple = ()  # ((dt, weight), ...) for per-dt

    def __post_init__(self):
        if self.kind not in ("identity", "constant", "log", "per-dt"):
            raise ValueError(f"unknown weight scheme {self.kind!r}")


def weight_apply(scheme: WeightScheme, spacings) -> np.ndarray:
    """Weighted spacings w(dt_i); their sum equals the raw total span."""
    dts = np.asarray(spacings, dtype=float)
    total = dts.sum()
    n = dts.size
    if scheme.kind == "identity":
        w = dts.copy()
    elif scheme.kind == "constant":
        w = np.full(n, total / n)
    elif scheme.kind == "log":
        logs = np.log(dts)
        c = (total - scheme.gamma * logs.sum()) / n
        w = scheme.gamma * logs + c
    else:
        table = dict(scheme.multipliers)
        try:
            w = np.array([table[dt] for dt in dts])
        except KeyError as err:
            raise ValueError(f"no multiplier for spacing {err.args[0]}") from None
    if np.any(w <= 0):
        raise ValueError("weight positivity violated")
    if abs(w.sum() - total) > 1e-10 * max(1.0, abs(total)):
        raise ValueError("weights must preserve the total observation span")
    return w


def conditional_variance(sigma2_prev: float, dt: float, params: CogarchParams,
                         mode: str = "exact") -> float:
    """One-step conditional variance of the next return.

    Exact mode evaluates

        (sigma2_prev - beta/(eta-phi)) * (e^{(eta-phi) dt} - 1)/(eta-phi)
            + beta dt / (eta-phi),

    first-order mode uses sigma2_prev * dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sigma2_prev <= 0:
        raise ValueError("previous variance must be positive")
    if mode == "first-order":
        return sigma2_prev * dt
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    c = params.eta - params.phi
    if c == 0.0:
        raise ValueError("eta = phi is not supported in exact mode")
    return (sigma2_prev - params.beta / c) * (math.expm1(c * dt) / c) \
        + params.beta * dt / c


def volatility_recursion(sigma2_prev: float, dt: float, y: float,
                         params: CogarchParams) -> float:
    """GARCH-type variance update from one observed return."""
    decay = math.exp(-params.eta * dt)
    return params.beta * dt + decay * sigma2_prev + params.phi * decay * y * y


def pseudo_log_likelihood(series: ReturnsSeries, params: CogarchParams,
                          mode: str = "exact",
                          weights: WeightScheme | None = None) -> float:
    """Gaussian pseudo-log-likelihood of the series under params.

    The variance recursion starts at the stationary mean beta/(eta - phi)
    and every spacing is replaced by its weighted counterpart throughout
    (both in the recursion and in the conditional variance).  Returns -inf
    when eta <= phi or any intermediate quantity is invalid, so optimizers
    can reject the point.
    """
    if mode not in ("exact", "first-order"):
        raise ValueError(f"unknown mode {mode!r}")
    scheme = weights if weights is not None else WeightScheme("identity")
    w = weight_apply(scheme, series.spacings)
    return float(pml_loglik(
        np.ascontiguousarray(series.returns), np.ascontiguousarray(w),
        params.beta, params.eta, params.phi, mode == "first-order",
    ))


@dataclass(frozen=True)
class FitConfig:
    mode: str = "exact"  # "exact" | "first-order"
    restarts: int = 10
    xtol: float = 1e-14  # simplex diameter stopping rule
    max_iter: int = 5000
    seed: int = 0
    floor: float = 1e-12  # lower bound kept under the log reparameterization


@dataclass
class FitResult:
    beta: float
    eta: float
    phi: float
    loglik: float
    std_errors: dict | None
    filtered_sigma2: np.ndarray | None
    stationary: bool
    hit_floor: bool
    converged: bool
    restarts: int
    iterations: int
    simplex_diameter: float
    mode: str
    seed: int

    @property
    def params(self) -> CogarchParams:
        return CogarchParams(self.beta, self.eta, self.phi)

    def estimates(self) -> dict:
        return {"beta": self.beta, "eta": self.eta, "phi": self.phi}


@dataclass
class WeightedFit:
    result: FitResult
    scheme: WeightScheme


def fit(series: ReturnsSeries, config: FitConfig = FitConfig(),
        scheme: WeightScheme | None = None) -> FitResult:
    """Multi-start PML fit of (beta, eta, phi) with a fixed weight scheme."""
    scheme = scheme if scheme is not None else WeightScheme("identity")
    w = weight_apply(scheme, series.spacings)
    return _fit_core(series, config, lambda extra: w, n_extra=0,
                     extra_base=(), warm_starts=())[0]


def fit_weighted(series: ReturnsSeries, family: str,
                 config: FitConfig = FitConfig()) -> WeightedFit:
    """Jointly fit (beta, eta, phi) and the weight-scheme parameters.

    The identity and constant families carry no extra parameters.  The log
    family adds gamma and is warm-started from the constant fit (its gamma=0
    member), the per-dt family adds one multiplier per distinct spacing
    beyond the span constraint and is warm-started from the identity,
    constant, and fitted log members it nests, so the optimized likelihoods
    are ordered per-dt >= log >= constant by construction.
    """
    dts = series.spacings
    total = dts.sum()

    if family in ("identity", "constant"):
        scheme = WeightScheme(family)
        return WeightedFit(fit(series, config, scheme=scheme), scheme)

    if family == "log":
        logs = np.log(dts)

        def builder(extra):
            gamma = extra[0]
            c = (total - gamma * logs.sum()) / dts.size
            w = gamma * logs + c
            return w if np.all(w > 0) else None

        constant_fit = fit(series, config, scheme=WeightScheme("constant"))
        warm = (np.concatenate((
            np.log([constant_fit.beta, constant_fit.eta, constant_fit.phi]),
            [0.0])),)
        result, theta = _fit_core(series, config, builder, n_extra=1,
                                  extra_base=(0.0,), warm_starts=warm)
        return WeightedFit(result, WeightScheme("log", gamma=float(theta[3])))

    if family == "per-dt":
        distinct, inverse, counts = np.unique(dts, return_inverse=True,
                                              return_counts=True)
        k = distinct.size

        def values_from_logits(logits):
            full = np.concatenate((logits, [0.0]))
            scaled = np.exp(full - full.max())
            return total * scaled / (counts * scaled).sum()

        def builder(extra):
            return values_from_logits(extra)[inverse]

        def encode(values):
            return np.log(values[:-1] / values[-1])

        log_fit = fit_weighted(series, "log", config)
        # distinct-spacing weights of each nested member
        identity_values = distinct
        constant_values = np.full(k, total / dts.size)
        gamma = log_fit.scheme.gamma
        c = (total - gamma * np.log(dts).sum()) / dts.size
        log_member = gamma * np.log(distinct) + c

        warm = []
        base_log_params = np.log([log_fit.result.beta, log_fit.result.eta,
                                  log_fit.result.phi])
        if k > 1:
            warm.append(np.concatenate((base_log_params, encode(log_member))))
            warm.append(np.concatenate((base_log_params, encode(identity_values))))
            warm.append(np.concatenate((base_log_params, encode(constant_values))))
        else:
            warm.append(base_log_params)
        result, theta = _fit_core(series, config, builder, n_extra=k - 1,
                                  extra_base=encode(identity_values) if k > 1 else (),
                                  warm_starts=tuple(warm))
        values = values_from_logits(np.asarray(theta[3:]))
        scheme = WeightScheme("per-dt",
                              multipliers=tuple(zip(distinct.tolist(),
                                                    values.tolist())))
        return WeightedFit(result, scheme)

    raise ValueError(f"unknown weight-scheme family {family!r}")


def _fit_core(series, config, builder, n_extra, extra_base, warm_starts):
    y = np.ascontiguousarray(series.returns)
    dts = series.spacings
    first_order = config.mode == "first-order"
    if config.mode not in ("exact", "first-order"):
        raise ValueError(f"unknown mode {config.mode!r}")
    log_floor = math.log(config.floor)

    def objective(theta):
        if np.any(theta[:3] < log_floor) or np.any(theta[:3] > 50.0):
            return np.inf
        w = builder(theta[3:])
        if w is None:
            return np.inf
        beta, eta, phi = np.exp(theta[:3])
        value = pml_loglik(y, np.ascontiguousarray(w), beta, eta, phi,
                           first_order)
        return -value

    # dispersion point: variance of per-unit-time returns and mild defaults
    v_bar = float(np.mean(y**2 / dts))
    eta0, phi0 = 0.1, 0.05
    beta0 = max((eta0 - phi0) * v_bar, config.floor * 10)
    base = np.concatenate((np.log([beta0, eta0, phi0]),
                           np.asarray(extra_base, dtype=float)))

    rng = np.random.default_rng(config.seed)
    starts = [np.asarray(s, dtype=float) for s in warm_starts]
    if not any(np.array_equal(s, base) for s in starts):
        starts.append(base)
    while len(starts) < max(config.restarts, len(starts)):
        candidate = base.copy()
        for _ in range(64):
            candidate[:3] = base[:3] + rng.normal(0.0, 0.6, size=3)
            if n_extra:
                candidate[3:] = base[3:] + rng.normal(0.0, 0.5, size=n_extra)
            if candidate[1] > candidate[2] and np.isfinite(objective(candidate)):
                break
        starts.append(candidate)

    best = None
    best_theta = None
    for i, x0 in enumerate(starts):
        scale = 0.25 if i < len(warm_starts) + 1 else 0.25 * (0.5 + rng.uniform())
        result = nelder_mead(objective, axis_simplex(x0, scale),
                             xtol=config.xtol, max_iter=config.max_iter)
        if best is None or result.fval < best.fval:
            best = result
            best_theta = result.x
    if best is None or not np.isfinite(best.fval):
        raise FitError(
            f"no finite pseudo-likelihood over {len(starts)} restarts "
            f"(mode={config.mode}, n={series.n_obs})"
        )

    beta, eta, phi = np.exp(best_theta[:3])
    loglik = -best.fval
    hit_floor = bool(np.any(np.exp(best_theta[:3]) <= config.floor * 10))

    scheme_w = builder(best_theta[3:])
    std_errors = _observed_information_errors(y, scheme_w, beta, eta, phi,
                                              first_order)
    estimates = CogarchParams(beta, eta, phi)
    try:
        filtered = filter_volatility(series, estimates)
    except ValueError:
        filtered = None

    result = FitResult(
        beta=float(beta), eta=float(eta), phi=float(phi), loglik=loglik,
        std_errors=std_errors, filtered_sigma2=filtered,
        stationary=bool(eta > phi), hit_floor=hit_floor,
        converged=best.converged, restarts=len(starts),
        iterations=best.iterations, simplex_diameter=best.diameter,
        mode=config.mode, seed=config.seed,
    )
    return result, best_theta


def _observed_information_errors(y, w, beta, eta, phi, first_order):
    """Standard errors from the numerical Hessian of the log-likelihood.

    Central differences with step 1e-5 * (1 + |x|); reported only when the
    Hessian is negative definite.
    """
    x = np.array([beta, eta, phi])
    steps = 1e-5 * (1.0 + np.abs(x))
    w = np.ascontiguousarray(w)

    def ll(p):
        return pml_loglik(y, w, p[0], p[1], p[2], first_order)

    f0 = ll(x)
    hessian = np.empty((3, 3))
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = steps[i]
        hessian[i, i] = (ll(x + ei) - 2.0 * f0 + ll(x - ei)) / steps[i] ** 2
        for j in range(i + 1, 3):
            ej = np.zeros(3)
            ej[j] = steps[j]
            cross = (ll(x + ei + ej) - ll(x + ei - ej)
                     - ll(x - ei + ej) + ll(x - ei - ej))
            hessian[i, j] = hessian[j, i] = cross / (4.0 * steps[i] * steps[j])

    if not np.all(np.isfinite(hessian)):
        return None
    if np.any(np.linalg.eigvalsh(hessian) >= 0):
        return None
    cov = np.linalg.inv(-hessian)
    diag = np.diag(cov)
    if np.any(diag < 0):
        return None
    se = np.sqrt(diag)
    return {"beta": float(se[0]), "eta": float(se[1]), "phi": float(se[2])}


def filter_volatility(series: ReturnsSeries, estimates: CogarchParams,
                      variant: str = "unit-step") -> np.ndarray:
    """Filtered variance sequence implied by the fitted parameters.

    The default "unit-step" variant runs

        s2_i = beta + (1 - eta) s2_{i-1} + phi y_i^2

    starting from the stationary mean; the "spacing" variant uses the
    spacing-aware update beta dt + e^{-eta dt} (s2_{i-1} + phi y_i^2 ...).
    """
    start = estimates.stationary_mean()
    y = series.returns
    dts = series.spacings
    out = np.empty(y.size + 1)
    out[0] = start
    if variant == "unit-step":
        if estimates.eta > 1.0:
            raise ValueError("unit-step filter needs eta <= 1 for positivity")
        keep = 1.0 - estimates.eta
        for i in range(y.size):
            out[i + 1] = estimates.beta + keep * out[i] + estimates.phi * y[i] ** 2
    elif variant == "spacing":
        for i in range(y.size):
            out[i + 1] = volatility_recursion(out[i], dts[i], y[i], estimates)
    else:
        raise ValueError(f"unknown filter variant {variant!r}")
    return out


def transform_to_garch(params: CogarchParams, dt: float,
                       annualize: float | None = None):
    """Discrete GARCH(1,1) parameters implied at observation spacing dt.

        omega = beta dt^2,  theta = phi e^{-eta dt} dt,  kappa = e^{-eta dt}

    With `annualize` set (e.g. 365), omega is reported as the annualized
    volatility sqrt(annualize * omega) instead of a variance.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    decay = math.exp(-params.eta * dt)
    omega = params.beta * dt * dt
    theta = params.phi * decay * dt
    if annualize is not None:
        return math.sqrt(annualize * omega), theta, decay
    return omega, theta, decay


def long_run_volatility(params: CogarchParams, annualize: float = 365.0) -> float:
    """Annualized long-run volatility sqrt(annualize * beta / (eta - phi))."""
    return math.sqrt(annualize * params.stationary_mean())
