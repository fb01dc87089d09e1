"""Monte Carlo replication engine: simulate many series from a known truth,
fit each one, and aggregate bias / MAE / RMSE per parameter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import FitConfig, FitError, FitResult, ReturnsSeries, fit
from .levy import LevySpec, simulate_levy_path
from .simulate import CogarchParams, simulate_exact

__all__ = [
    "ASX_GAP_FREQUENCIES",
    "EquallySpaced",
    "FrequencyGrid",
    "StudyDesign",
    "Aggregates",
    "StudyReport",
    "aggregate",
    "run_study",
]

# Inter-observation gap frequencies (gap length in days -> count) of a decade
# of once-per-trading-day index observations: weekends, long weekends and
# holidays produce gaps of 2..6 days.  Counts sum to 2529 over 3653 days.
ASX_GAP_FREQUENCIES = ((1.0, 1991), (2.0, 13), (3.0, 483), (4.0, 24),
                       (5.0, 17), (6.0, 1))


@dataclass(frozen=True)
class EquallySpaced:
    n_obs: int
    spacing: float = 1.0

    def spacing_multiset(self):
        return np.full(self.n_obs, self.spacing)


@dataclass(frozen=True)
class FrequencyGrid:
    """Observation gaps given as (gap, count) rows.

    The arrangement is a deterministic shuffle shared by all replications
    unless shuffle_each is set, in which case each replication re-shuffles.
    """

    rows: tuple = ASX_GAP_FREQUENCIES
    shuffle_each: bool = False

    def spacing_multiset(self):
        return np.concatenate([np.full(int(count), float(gap))
                               for gap, count in self.rows])


@dataclass(frozen=True)
class StudyDesign:
    truth: CogarchParams
    driver: LevySpec
    grid: EquallySpaced | FrequencyGrid
    replications: int
    seed: int = 0
    fit_config: FitConfig = field(default_factory=FitConfig)
    burn_in: float = 1000.0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        self.truth.stationary_mean()  # truth must satisfy eta > phi


@dataclass
class Aggregates:
    mean: float
    bias: float
    mae: float
    rmse: float
    rel_rmse: float


def aggregate(estimates, truth: float) -> Aggregates:
    """Mean, bias, MAE, RMSE and RMSE/truth of a batch of estimates."""
    values = np.asarray(estimates, dtype=float)
    if values.size == 0:
        raise ValueError("no estimates to aggregate")
    errors = values - truth
    rmse = float(np.sqrt(np.mean(errors**2)))
    return Aggregates(
        mean=float(values.mean()),
        bias=float(errors.mean()),
        mae=float(np.abs(errors).mean()),
        rmse=rmse,
        rel_rmse=rmse / truth,
    )


@dataclass
class StudyReport:
    truth: dict
    metrics: dict  # parameter name -> Aggregates
    raw: np.ndarray  # (n_successful, 3) columns beta, eta, phi
    failures: int
    replications: int
    seed: int

    def table(self) -> str:
        """Plain-text summary, parameters in the beta / phi / eta order."""
        names = ("beta", "phi", "eta")
        lines = [f"{'':>10}" + "".join(f"{n:>12}" for n in names)]
        rows = [
            ("true", lambda n: self.truth[n]),
            ("mean", lambda n: self.metrics[n].mean),
            ("bias", lambda n: self.metrics[n].bias),
            ("MAE", lambda n: self.metrics[n].mae),
            ("RMSE", lambda n: self.metrics[n].rmse),
            ("rel. RMSE", lambda n: self.metrics[n].rel_rmse),
        ]
        for label, get in rows:
            lines.append(f"{label:>10}" + "".join(f"{get(n):>12.4f}" for n in names))
        lines.append(f"replications: {self.replications}, failures: {self.failures}")
        return "\n".join(lines)


def run_study(design: StudyDesign) -> StudyReport:
    """Simulate, fit and aggregate over all replications of the design.

    Every replication draws a fresh driving path with a seed derived from
    the master seed, simulates the exact process with a burn-in to reach the
    stationary regime, samples returns on the design grid, and fits by PML.
    Failed fits (no finite likelihood, or estimates pinned at the parameter
    floor) are excluded from the aggregates and counted.
    """
    root = np.random.SeedSequence(design.seed)
    grid_stream, rep_stream = root.spawn(2)
    base_spacings = design.grid.spacing_multiset()
    if isinstance(design.grid, FrequencyGrid):
        fixed = np.random.default_rng(grid_stream).permutation(base_spacings)
    else:
        fixed = base_spacings

    rep_children = rep_stream.spawn(design.replications)
    collected = []
    failures = 0
    for child in rep_children:
        path_seed_seq, shuffle_seq = child.spawn(2)
        if isinstance(design.grid, FrequencyGrid) and design.grid.shuffle_each:
            spacings = np.random.default_rng(shuffle_seq).permutation(base_spacings)
        else:
            spacings = fixed
        obs_times = design.burn_in + np.concatenate(([0.0], np.cumsum(spacings)))
        horizon = float(obs_times[-1])
        path_seed = int(path_seed_seq.generate_state(1)[0])
        path = simulate_levy_path(design.driver, horizon, path_seed)
        exact = simulate_exact(path, design.truth, obs_times)
        series = ReturnsSeries.from_path(exact, obs_times)
        try:
            result = fit(series, design.fit_config)
        except FitError:
            failures += 1
            continue
        if result.hit_floor:
            failures += 1
            continue
        collected.append((result.beta, result.eta, result.phi))

    if not collected:
        raise FitError("every replication failed to fit")
    raw = np.asarray(collected)
    truth = {"beta": design.truth.beta, "eta": design.truth.eta,
             "phi": design.truth.phi}
    metrics = {
        "beta": aggregate(raw[:, 0], truth["beta"]),
        "eta": aggregate(raw[:, 1], truth["eta"]),
        "phi": aggregate(raw[:, 2], truth["phi"]),
    }
    return StudyReport(truth=truth, metrics=metrics, raw=raw,
                       failures=failures, replications=design.replications,
                       seed=design.seed)
