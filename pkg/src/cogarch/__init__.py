"""Continuous-time GARCH toolkit: exact simulation of the Levy-driven
bivariate (level, variance) process, discrete GARCH approximations on
irregular grids with pathwise convergence diagnostics, and pseudo-maximum-
likelihood estimation from irregularly spaced returns."""

from .embedding import (ConvergenceReport, EmbeddedSeries, SkorokhodBound,
                        convergence_study, embed, explicit_sigma_check, lift,
                        skorokhod_bound, time_change_knots, verify_recursion)
from .estimation import (FitConfig, FitError, FitResult, ReturnsSeries,
                         WeightScheme, WeightedFit, conditional_variance, fit,
                         fit_weighted, filter_volatility, long_run_volatility,
                         pseudo_log_likelihood, transform_to_garch,
                         volatility_recursion, weight_apply)
from .io import frequency_table, ingest, synthetic_asx_series
from .levy import (Grid, InnovationSet, JumpDist, LevyPath, LevySpec,
                   auxiliary_process, choose_threshold, extract_innovations,
                   innovation_moments, levy_tail, simulate_levy_path)
from .montecarlo import (ASX_GAP_FREQUENCIES, Aggregates, EquallySpaced,
                         FrequencyGrid, StudyDesign, StudyReport, aggregate,
                         run_study)
from .simplex import NelderMeadResult, axis_simplex, nelder_mead
from .simulate import (BivariatePath, CogarchParams, euler_oracle,
                       exact_variance, simulate_exact, stationary_sigma0)

__version__ = "0.1.0"
