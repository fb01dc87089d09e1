"""Jump Levy drivers and the per-cell first-jump innovation machinery.

The driving noise is a centered Levy process with unit variance per unit
time: a compound Poisson process, optionally with an independent Brownian
component, or a pure Brownian motion (kept for the deterministic-volatility
limit check).  Each observation cell of a grid contributes one standardized
innovation built from the first sufficiently large jump in the cell.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

__all__ = [
    "JumpDist",
    "LevySpec",
    "Grid",
    "LevyPath",
    "InnovationSet",
    "simulate_levy_path",
    "levy_tail",
    "choose_threshold",
    "innovation_moments",
    "extract_innovations",
    "auxiliary_process",
]

# Normalization is enforced to this tolerance at construction time.
_NORM_TOL = 1e-12


@dataclass(frozen=True)
class JumpDist:
    """Symmetric jump-size law: centered normal or a two-point +/-a law."""

    kind: str  # "normal" | "two-point"
    scale: float  # standard deviation (normal) or magnitude a (two-point)

    def __post_init__(self):
        if self.kind not in ("normal", "two-point"):
            raise ValueError(f"unknown jump distribution kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("jump scale must be positive")

    @property
    def second_moment(self) -> float:
        return self.scale**2

    def rescaled(self, factor: float) -> "JumpDist":
        return JumpDist(self.kind, self.scale * factor)

    def tail_prob(self, m: float) -> float:
        """P(|J| > m)."""
        if m <= 0:
            return 1.0
        if self.kind == "normal":
            return 2.0 * norm.sf(m / self.scale)
        return 1.0 if self.scale > m else 0.0

    def truncated_second_moment(self, m: float) -> float:
        """E[J^2 1{|J| > m}]."""
        if m <= 0:
            return self.second_moment
        if self.kind == "normal":
            u = m / self.scale
            # int_u^inf z^2 phi(z) dz = (1 - Phi(u)) + u phi(u), doubled by symmetry
            return self.scale**2 * 2.0 * (norm.sf(u) + u * norm.pdf(u))
        return self.second_moment if self.scale > m else 0.0

    def truncated_first_moment(self, m: float) -> float:
        """E[J 1{|J| > m}]; zero for the symmetric laws supported here."""
        return 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "normal":
            return rng.normal(0.0, self.scale, size=n)
        signs = rng.integers(0, 2, size=n) * 2 - 1
        return self.scale * signs.astype(float)


@dataclass(frozen=True)
class LevySpec:
    """Centered, unit-variance Levy driver specification.

    Invariant: sigma^2 + rate * E[J^2] = 1 exactly (the jump law is rescaled
    by the constructors to enforce this), so that the driver has mean zero
    and variance one per unit time.
    """

    kind: str  # "compound-poisson" | "jump-diffusion" | "pure-diffusion"
    rate: float = 0.0
    jump_dist: JumpDist | None = None
    sigma: float = 0.0  # Brownian scale

    def __post_init__(self):
        if self.kind in ("compound-poisson", "jump-diffusion"):
            if self.jump_dist is None or self.rate <= 0:
                raise ValueError("pure-diffusion driver requires jump part; "
                                 "jump drivers need rate > 0 and a jump law")
        second = self.sigma**2 + self.rate * (
            self.jump_dist.second_moment if self.jump_dist is not None else 0.0
        )
        if abs(second - 1.0) > _NORM_TOL:
            raise ValueError(
                f"driver not normalized: E L(1)^2 = {second!r}, expected 1"
            )

    @classmethod
    def compound_poisson(cls, rate: float, jump_dist: JumpDist | str = "standard-normal"):
        """Compound Poisson driver; the jump law is rescaled so rate*E[J^2] = 1."""
        if rate <= 0:
            raise ValueError("rate must be positive")
        dist = _resolve_jump_dist(jump_dist)
        factor = math.sqrt(1.0 / (rate * dist.second_moment))
        return cls("compound-poisson", rate=rate, jump_dist=dist.rescaled(factor))

    @classmethod
    def jump_diffusion(cls, sigma: float, rate: float,
                       jump_dist: JumpDist | str = "standard-normal"):
        """Jump plus Brownian driver; jumps are rescaled so the total variance is 1."""
        if not 0.0 < sigma**2 < 1.0:
            raise ValueError("pure-diffusion driver requires jump part; "
                             "need 0 < sigma^2 < 1 to leave mass for jumps")
        if rate <= 0:
            raise ValueError("rate must be positive")
        dist = _resolve_jump_dist(jump_dist)
        factor = math.sqrt((1.0 - sigma**2) / (rate * dist.second_moment))
        return cls("jump-diffusion", rate=rate, jump_dist=dist.rescaled(factor),
                   sigma=sigma)

    @classmethod
    def pure_diffusion(cls):
        """Brownian-only driver (deterministic-volatility limit checks)."""
        return cls("pure-diffusion", sigma=1.0)

    @property
    def finite_activity(self) -> bool:
        return True  # infinite-activity drivers enter only via tail-function stubs

    def tail(self, m: float) -> float:
        """Jump intensity above magnitude m (tail of the Levy measure)."""
        if self.jump_dist is None:
            return 0.0
        return self.rate * self.jump_dist.tail_prob(m)

    def truncated_x1(self, m: float) -> float:
        if self.jump_dist is None:
            return 0.0
        return self.rate * self.jump_dist.truncated_first_moment(m)

    def truncated_x2(self, m: float) -> float:
        if self.jump_dist is None:
            return 0.0
        return self.rate * self.jump_dist.truncated_second_moment(m)

    def mean_rate(self) -> float:
        """E L(1); zero by construction for the symmetric laws supported."""
        return self.truncated_x1(0.0)

    def variance_rate(self) -> float:
        """E L(1)^2 = sigma^2 + integral of x^2 against the Levy measure."""
        return self.sigma**2 + self.truncated_x2(0.0)


def _resolve_jump_dist(jump_dist: JumpDist | str) -> JumpDist:
    if isinstance(jump_dist, JumpDist):
        return jump_dist
    if jump_dist == "standard-normal":
        return JumpDist("normal", 1.0)
    raise ValueError(f"unknown jump distribution {jump_dist!r}")


@dataclass(frozen=True)
class Grid:
    """Deterministic partition 0 = t_0 < t_1 < ... < t_N of [0, T]."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("grid needs at least one cell")
        if times[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")

    @classmethod
    def uniform(cls, horizon: float, n_cells: int) -> "Grid":
        if horizon <= 0 or n_cells < 1:
            raise ValueError("need horizon > 0 and at least one cell")
        return cls(np.linspace(0.0, horizon, n_cells + 1))

    @classmethod
    def from_spacings(cls, spacings) -> "Grid":
        dts = np.asarray(spacings, dtype=float)
        return cls(np.concatenate(([0.0], np.cumsum(dts))))

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def max_spacing(self) -> float:
        return float(np.max(self.spacings))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_cells(self) -> int:
        return self.times.size - 1


@dataclass(frozen=True)
class LevyPath:
    """One realization of a Levy driver on [0, horizon].

    Jumps are stored as ordered marks; when the driver has a Brownian part,
    the standard Brownian motion is stored at the reference grid points so
    that per-cell increments can be recovered for any subgrid.
    """

    horizon: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    sigma: float = 0.0
    seed: int | None = None
    brownian_times: np.ndarray | None = None
    brownian_values: np.ndarray | None = None

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        js = np.asarray(self.jump_sizes, dtype=float)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "jump_sizes", js)
        if jt.shape != js.shape:
            raise ValueError("jump times and sizes must align")
        if jt.size:
            if np.any(jt <= 0) or np.any(jt > self.horizon):
                raise ValueError("jump times must lie in (0, horizon]")
            if np.any(np.diff(jt) <= 0):
                raise ValueError("jump times must be strictly increasing")

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size

    def brownian_increments(self, grid: Grid) -> np.ndarray:
        """Per-cell Brownian increments of `grid`, aggregated from storage."""
        if self.sigma == 0.0:
            return np.zeros(grid.n_cells)
        w_at = self._brownian_at(grid.times)
        return np.diff(w_at)

    def _brownian_at(self, times: np.ndarray) -> np.ndarray:
        if self.brownian_times is None:
            raise ValueError("path carries no Brownian component")
        idx = np.searchsorted(self.brownian_times, times)
        if np.any(idx >= self.brownian_times.size) or np.any(
            self.brownian_times[idx] != times
        ):
            raise ValueError(
                "requested times are not a subset of the stored Brownian grid"
            )
        return self.brownian_values[idx]


@dataclass(frozen=True)
class InnovationSet:
    """Per-cell first-jump marks standardized into unit-variance innovations."""

    grid: Grid
    threshold: float
    tau: np.ndarray  # first qualifying jump time per cell, inf if none
    mark: np.ndarray  # jump size at tau (plus diffusion increment if present)
    nu: np.ndarray
    xi: np.ndarray
    eps: np.ndarray

    @property
    def tau_star(self) -> np.ndarray:
        """tau_i clipped at the right cell endpoint (tau ^ t_i)."""
        return np.minimum(self.tau, self.grid.times[1:])


def simulate_levy_path(spec: LevySpec, horizon: float, seed,
                       grid: Grid | None = None) -> LevyPath:
    """Draw one path of `spec` on [0, horizon].

    Jump count is Poisson(rate * horizon) with times uniform on (0, horizon]
    and i.i.d. sizes from the normalized jump law.  Exact ties between jump
    times are re-drawn so the ordering is strict.  Deterministic given
    (spec, horizon, seed).  Drivers with a Brownian part additionally need a
    reference `grid` on which the Brownian motion is recorded.
    """
    if horizon <= 0:
        raise ValueError("T must be positive")
    rng = np.random.default_rng(seed)

    jump_times = np.array([])
    jump_sizes = np.array([])
    if spec.jump_dist is not None:
        n = rng.poisson(spec.rate * horizon)
        times = np.sort(horizon * rng.uniform(size=n))
        # jumps live in (0, T] with strictly distinct times; re-draw on exact tie
        while times.size and (times[0] == 0.0 or np.any(np.diff(times) == 0.0)):
            times = np.sort(horizon * rng.uniform(size=n))
        jump_times = times
        jump_sizes = spec.jump_dist.sample(rng, n)

    brownian_times = brownian_values = None
    if spec.sigma > 0.0:
        if grid is None:
            raise ValueError("drivers with a diffusion component need a reference grid")
        if abs(grid.horizon - horizon) > 1e-12 * max(1.0, horizon):
            raise ValueError("reference grid horizon differs from path horizon")
        increments = rng.normal(0.0, np.sqrt(grid.spacings))
        brownian_times = grid.times
        brownian_values = np.concatenate(([0.0], np.cumsum(increments)))

    return LevyPath(
        horizon=float(horizon),
        jump_times=jump_times,
        jump_sizes=jump_sizes,
        sigma=spec.sigma,
        seed=seed if isinstance(seed, int) else None,
        brownian_times=brownian_times,
        brownian_values=brownian_values,
    )


def levy_tail(spec: LevySpec, m: float) -> float:
    """Rate of jumps exceeding magnitude m."""
    if m < 0:
        raise ValueError("threshold must be nonnegative")
    return spec.tail(m)


# Fixed decreasing candidate ladder for the jump-size cutoff (capped at 1).
_THRESHOLD_LADDER = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01,
                     5e-3, 2e-3, 1e-3, 1e-4, 1e-5, 1e-6, 0.0)
_THRESHOLD_THETA = 0.01


def choose_threshold(grid: Grid, spec) -> float:
    """Pick the jump-size cutoff for the first-jump approximation.

    Returns the smallest ladder candidate m with max_spacing * tail(m)^2 <=
    theta (minimal truncation subject to the rate condition).  Finite-activity
    drivers fall back to m = 0 with a warning when no candidate qualifies,
    since every jump may be kept.  `spec` may also be a bare tail function
    (infinite-activity stub).
    """
    if callable(spec) and not isinstance(spec, LevySpec):
        tail, finite = spec, False
    else:
        tail, finite = spec.tail, spec.finite_activity
    dt_max = grid.max_spacing
    admissible = [m for m in _THRESHOLD_LADDER if dt_max * tail(m) ** 2 <= _THRESHOLD_THETA]
    if admissible:
        return min(admissible)
    warnings.warn("rate condition not met at this resolution", stacklevel=2)
    return 0.0 if finite else _THRESHOLD_LADDER[0]


def innovation_moments(spec: LevySpec, dt: float, m: float) -> tuple[float, float]:
    """Mean and variance of the retained first-jump mark over a cell of length dt.

    Closed form from the truncated moments of the jump law: with tail
    p = tail(m) and q = (1 - exp(-dt*p))/p,

        nu  = q * int_{|x|>m} x  Pi(dx)
        xi2 = q * int_{|x|>m} x^2 Pi(dx) - nu^2.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tail = spec.tail(m)
    if tail <= 0.0:
        raise ValueError("no jumps above threshold")
    q = -math.expm1(-dt * tail) / tail
    nu = q * spec.truncated_x1(m)
    xi2 = q * spec.truncated_x2(m) - nu**2
    return nu, xi2


def extract_innovations(path: LevyPath, grid: Grid, m: float,
                        spec: LevySpec) -> InnovationSet:
    """Standardized innovations of `path` on `grid` with cutoff m.

    Per cell [t_{i-1}, t_i) the mark is the size of the first jump of
    magnitude >= m (zero if none); with a Brownian component the cell's
    diffusion increment is added to the mark and the variance is adjusted
    by sigma^2 * dt.
    """
    if abs(path.horizon - grid.horizon) > 1e-12 * max(1.0, grid.horizon):
        raise ValueError("path and grid horizons differ")

    n = grid.n_cells
    dts = grid.spacings
    tau = np.full(n, np.inf)
    mark = np.zeros(n)

    if path.n_jumps:
        qualifying = np.abs(path.jump_sizes) >= m
        times = path.jump_times[qualifying]
        sizes = path.jump_sizes[qualifying]
        # cell of a jump at t is the half-open interval [t_{i-1}, t_i)
        cells = np.searchsorted(grid.times, times, side="right") - 1
        inside = cells < n  # a jump exactly at the horizon belongs to no cell
        cells, times, sizes = cells[inside], times[inside], sizes[inside]
        first = np.unique(cells, return_index=True)[1]
        tau[cells[first]] = times[first]
        mark[cells[first]] = sizes[first]

    tail = spec.tail(m)
    if tail > 0.0:
        q = -np.expm1(-dts * tail) / tail
        nu = q * spec.truncated_x1(m)
        xi2 = q * spec.truncated_x2(m) - nu**2
    else:
        if spec.sigma == 0.0:
            raise ValueError("no jumps above threshold")
        nu = np.zeros(n)
        xi2 = np.zeros(n)

    if spec.sigma > 0.0:
        mark = mark + spec.sigma * path.brownian_increments(grid)
        xi2 = xi2 + spec.sigma**2 * dts

    xi = np.sqrt(xi2)
    eps = (mark - nu) / xi
    return InnovationSet(grid=grid, threshold=m, tau=tau, mark=mark,
                         nu=np.broadcast_to(nu, (n,)).copy(), xi=xi, eps=eps)


def auxiliary_process(path: LevyPath, params, t: float) -> float:
    """Drift-minus-jump exponent X(t) entering the closed-form variance.

    X(t) = eta_eff * t - sum_{s <= t} log(1 + phi * (jump size)^2) with
    eta_eff = eta - phi * sigma^2 when the driver has a Brownian part.
    """
    if t < 0 or t > path.horizon:
        raise ValueError("t outside path horizon")
    eta_eff = params.eta - params.phi * path.sigma**2
    upto = np.searchsorted(path.jump_times, t, side="right")
    drops = np.log1p(params.phi * path.jump_sizes[:upto] ** 2).sum()
    return eta_eff * t - float(drops)
