"""Causal effects before an observed event when the treatment time is unknown.

A pilot sample of matched treated/control pairs estimates how many days
before the event the outcomes are still comparable (the last plausible
randomized experiment time, LaPRET); the main sample then reports per-day
effects only inside that window.
"""

__version__ = "0.1.0"

from .errors import LapretError  # noqa: E402
from .estimator import (  # noqa: E402
    HeuristicRanges,
    LapretParams,
    PairLapret,
    PilotResult,
    aggregate,
    estimate_pair_lapret,
    heuristic_ranges,
)
from .matching import MatchSet, PropensityModel, fit_propensity, match  # noqa: E402
from .model import MatchedPair, UnitSeries, build_pair, impute_treatment  # noqa: E402
from .study import StudyPlan, StudyResult, run_main, run_pilot, run_study, sensitivity_sweep, split  # noqa: E402
