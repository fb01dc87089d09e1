"""Discrete GARCH approximation on a grid, its piecewise-constant lift, and
the pathwise distance diagnostics against the exact continuous-time state.

The approximation and the exact process share one driving path, so the
distance between them can be certified through an explicit time change that
aligns grid points with the per-cell first-jump instants; the reported
number is an upper bound for the Skorokhod J1 distance, not the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .levy import Grid, InnovationSet, LevySpec, extract_innovations, simulate_levy_path
from .simulate import BivariatePath, CogarchParams, simulate_exact

__all__ = [
    "EmbeddedSeries",
    "SkorokhodBound",
    "ConvergenceReport",
    "embed",
    "verify_recursion",
    "explicit_sigma_check",
    "lift",
    "time_change_knots",
    "skorokhod_bound",
    "convergence_study",
]


@dataclass
class EmbeddedSeries:
    """Discrete (level, variance) recursion output; arrays have length N+1."""

    grid: Grid
    innovations: InnovationSet
    params: CogarchParams
    sigma0: float
    G: np.ndarray
    sigma2: np.ndarray


def embed(innovations: InnovationSet, params: CogarchParams,
          sigma0: float) -> EmbeddedSeries:
    """Run the level/variance recursions over all cells.

        G_i      = G_{i-1} + sigma_{i-1} sqrt(dt_i) eps_i
        sigma2_i = beta dt_i + (1 + phi dt_i eps_i^2) exp(-eta dt_i) sigma2_{i-1}
    """
    if sigma0 <= 0:
        raise ValueError("initial variance must be positive")
    grid = innovations.grid
    dts = grid.spacings
    eps = innovations.eps
    n = grid.n_cells

    G = np.empty(n + 1)
    sig2 = np.empty(n + 1)
    G[0] = 0.0
    sig2[0] = sigma0
    beta, eta, phi = params.beta, params.eta, params.phi
    for i in range(1, n + 1):
        dt = dts[i - 1]
        e = eps[i - 1]
        G[i] = G[i - 1] + np.sqrt(sig2[i - 1] * dt) * e
        sig2[i] = beta * dt + (1.0 + phi * dt * e * e) * np.exp(-eta * dt) * sig2[i - 1]
    return EmbeddedSeries(grid=grid, innovations=innovations, params=params,
                          sigma0=sigma0, G=G, sigma2=sig2)


def verify_recursion(series: EmbeddedSeries) -> float:
    """Max absolute residual of both recursions over all indices."""
    dts = series.grid.spacings
    eps = series.innovations.eps
    p = series.params
    g_res = series.G[1:] - series.G[:-1] - np.sqrt(series.sigma2[:-1] * dts) * eps
    s_res = series.sigma2[1:] - (
        p.beta * dts
        + (1.0 + p.phi * dts * eps**2) * np.exp(-p.eta * dts) * series.sigma2[:-1]
    )
    return float(max(np.abs(g_res).max(), np.abs(s_res).max()))


def explicit_sigma_check(series: EmbeddedSeries) -> float:
    """Max relative gap between the recursion and its product-form expansion.

    The variance admits the closed expansion

        sigma2_i = beta sum_j dt_j prod_{k>j} f_k + sigma2_0 prod_j f_j,
        f_k = exp(-eta dt_k) (1 + phi dt_k eps_k^2),

    evaluated here through cumulative log-products; the result is an
    algebraic identity, so the gap measures accumulated rounding only.
    """
    dts = series.grid.spacings
    eps = series.innovations.eps
    p = series.params
    log_f = -p.eta * dts + np.log1p(p.phi * dts * eps**2)
    cum = np.concatenate(([0.0], np.cumsum(log_f)))  # log prod_{k<=i} f_k
    # sigma2_i = e^{cum_i} (sigma2_0 + beta sum_{j<=i} dt_j e^{-cum_j})
    inner = np.concatenate(([0.0], np.cumsum(dts * np.exp(-cum[1:]))))
    explicit = np.exp(cum) * (series.sigma0 + p.beta * inner)
    rel = np.abs(explicit - series.sigma2) / np.abs(series.sigma2)
    return float(rel.max())


def lift(series: EmbeddedSeries) -> BivariatePath:
    """Piecewise-constant cadlag lift: cell [t_{i-1}, t_i) carries index i."""
    return BivariatePath(
        times=series.grid.times.copy(), G=series.G.copy(),
        sigma2=series.sigma2.copy(), flavor="embedded", params=series.params,
    )


def step_values(path: BivariatePath, ts, side: str = "right"):
    """Evaluate an embedded lift at arbitrary times.

    The value on [t_{i-1}, t_i) is the index-i value; the horizon maps to the
    last index, and the level is pinned to 0 at t = 0.
    """
    if path.flavor != "embedded":
        raise ValueError("step evaluation requires an embedded path")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    n = path.times.size - 1
    idx = np.searchsorted(path.times, ts, side=side)
    idx = np.clip(idx, 1, n)
    level = path.G[idx].copy()
    sigma2 = path.sigma2[idx].copy()
    level[ts == 0.0] = path.G[0]
    return level, sigma2


def time_change_knots(innovations: InnovationSet) -> np.ndarray:
    """Images of the grid points under the aligning time change.

    Interior grid points map to the per-cell first-jump instants clipped at
    the cell end; the endpoints stay fixed (a qualifying jump in the last
    cell is deliberately ignored so the change fixes the horizon).
    """
    grid = innovations.grid
    knots = np.empty(grid.n_cells + 1)
    knots[0] = 0.0
    knots[1:] = innovations.tau_star
    knots[-1] = grid.horizon
    return knots


@dataclass
class SkorokhodBound:
    """Certified upper bound for the pathwise Skorokhod distance."""

    sup_level: float
    sup_sigma2: float
    bound: float
    last_cell_jump: bool  # a qualifying jump in the final cell was ignored


def skorokhod_bound(embedded: BivariatePath, exact: BivariatePath,
                    innovations: InnovationSet) -> SkorokhodBound:
    """Distance components between the re-timed embedding and the exact path.

    The embedded values are re-timed to the first-jump instants (so both
    processes jump simultaneously) and compared on a mesh of grid points,
    jump instants and midpoints, with left limits taken at every mesh point;
    between mesh points the embedding is constant and the exact variance is
    monotone, so the mesh supremum is the true supremum up to rounding.
    The reported bound is sup|level| + sup|variance| + max cell length.
    """
    if abs(embedded.horizon - exact.horizon) > 1e-9 * max(1.0, exact.horizon):
        raise ValueError("paths live on different horizons")
    grid = innovations.grid
    knots = time_change_knots(innovations)  # strictly increasing a.s.
    jump_knots = knots[1:]

    mesh = np.unique(np.concatenate([exact.times, grid.times, jump_knots]))
    mids = 0.5 * (mesh[:-1] + mesh[1:])
    mesh = np.unique(np.concatenate([mesh, mids]))

    sup_level = 0.0
    sup_sigma2 = 0.0
    for side in ("right", "left"):
        count = np.searchsorted(jump_knots, mesh, side=side)
        emb_level = embedded.G[count]
        emb_sigma2 = embedded.sigma2[count]
        ex_level = exact.level_at(mesh, side=side)
        ex_sigma2 = exact.sigma2_at(mesh, side=side)
        sup_level = max(sup_level, float(np.abs(emb_level - ex_level).max()))
        sup_sigma2 = max(sup_sigma2, float(np.abs(emb_sigma2 - ex_sigma2).max()))

    return SkorokhodBound(
        sup_level=sup_level,
        sup_sigma2=sup_sigma2,
        bound=sup_level + sup_sigma2 + grid.max_spacing,
        last_cell_jump=bool(np.isfinite(innovations.tau[-1])),
    )


@dataclass
class ConvergenceReport:
    """Per-resolution medians of the distance components across seeds."""

    resolutions: np.ndarray  # max cell length per ladder level
    sup_level_median: np.ndarray
    sup_sigma2_median: np.ndarray
    bound_median: np.ndarray
    monotone: bool  # median bound strictly decreasing along the ladder
    last_cell_jump_counts: np.ndarray
    terminal_sigma2: np.ndarray  # embedded variance at the horizon, (levels, seeds)
    seeds: list

    def rows(self):
        return [
            {
                "resolution": float(self.resolutions[k]),
                "sup_level_median": float(self.sup_level_median[k]),
                "sup_sigma2_median": float(self.sup_sigma2_median[k]),
                "bound_median": float(self.bound_median[k]),
                "last_cell_jump_count": int(self.last_cell_jump_counts[k]),
            }
            for k in range(self.resolutions.size)
        ]


def convergence_study(spec: LevySpec, params: CogarchParams, horizon: float,
                      spacings, n_seeds: int = 16, master_seed: int = 0,
                      threshold: float = 0.0) -> ConvergenceReport:
    """Shared-path refinement study of the embedding.

    Each seed draws one driving path; every ladder level re-extracts
    innovations from that same path (the construction is pathwise), embeds,
    and measures the distance bound against the same exact trajectory.
    """
    spacings = np.asarray(spacings, dtype=float)
    if spacings.size < 1 or np.any(spacings <= 0):
        raise ValueError("need at least one positive resolution")
    if np.any(np.diff(spacings) >= 0):
        raise ValueError("ladder must be strictly refining")
    for coarse, fine in zip(spacings[:-1], spacings[1:]):
        ratio = coarse / fine
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("each level must refine the previous grid")

    grids = [Grid.uniform(horizon, int(round(horizon / dt))) for dt in spacings]
    finest = grids[-1]
    seeds = [int(s.generate_state(1)[0])
             for s in np.random.SeedSequence(master_seed).spawn(n_seeds)]
    sigma0 = params.resolve_sigma0()

    n_levels = len(grids)
    sup_level = np.empty((n_levels, n_seeds))
    sup_sigma2 = np.empty((n_levels, n_seeds))
    bounds = np.empty((n_levels, n_seeds))
    last_jump = np.zeros((n_levels, n_seeds), dtype=bool)
    terminal = np.empty((n_levels, n_seeds))

    for j, seed in enumerate(seeds):
        ref_grid = finest if spec.sigma > 0 else None
        path = simulate_levy_path(spec, horizon, seed, grid=ref_grid)
        exact = simulate_exact(path, params, finest, sigma0=sigma0)
        for k, grid in enumerate(grids):
            innovations = extract_innovations(path, grid, threshold, spec)
            series = embed(innovations, params, sigma0)
            sb = skorokhod_bound(lift(series), exact, innovations)
            sup_level[k, j] = sb.sup_level
            sup_sigma2[k, j] = sb.sup_sigma2
            bounds[k, j] = sb.bound
            last_jump[k, j] = sb.last_cell_jump
            terminal[k, j] = series.sigma2[-1]

    bound_median = np.median(bounds, axis=1)
    return ConvergenceReport(
        resolutions=np.array([g.max_spacing for g in grids]),
        sup_level_median=np.median(sup_level, axis=1),
        sup_sigma2_median=np.median(sup_sigma2, axis=1),
        bound_median=bound_median,
        monotone=bool(np.all(np.diff(bound_median) < 0)) if n_levels > 1 else True,
        last_cell_jump_counts=last_jump.sum(axis=1),
        terminal_sigma2=terminal,
        seeds=seeds,
    )
