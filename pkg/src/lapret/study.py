"""Pilot/main study design: split, pilot d-hat, truncated main-study effects."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Literal, Optional, Sequence

import numpy as np

from .errors import EmptyWindow, NoVariation, PilotOverlap, TooFewUnits, ValidationError, WindowTooShort
from .estimator import Aggregation, LapretParams, PilotResult, Undetected, aggregate, estimate_pair_lapret
from .matching import MatchSet, fit_propensity, match
from .model import UnitSeries, build_pair

log = logging.getLogger(__name__)

Transform = Literal["levels", "lagged_diff"]
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class StudyPlan:
    pilot_unit_ids: frozenset
    main_unit_ids: frozenset
    params: LapretParams
    aggregation: Aggregation = "mean"
    transform: Transform = "levels"
    seed: int = 0
    undetected: Undetected = "zero"
    caliper: Optional[float] = None

    def __post_init__(self):
        if self.pilot_unit_ids & self.main_unit_ids:
            raise PilotOverlap("pilot and main unit sets overlap")
        if self.transform not in ("levels", "lagged_diff"):
            raise ValidationError(f"unknown transform {self.transform!r}")


@dataclass(frozen=True)
class EffectEstimate:
    relative_day: int
    estimate: float
    ci_low: float
    ci_high: float
    n_pairs: int


@dataclass(frozen=True)
class StudyResult:
    pilot: PilotResult
    effects: tuple[EffectEstimate, ...]
    causal_window_days: int
    n_pairs: int = 0


def _largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    base = np.floor(quotas).astype(int)
    rest = total - base.sum()
    order = sorted(range(len(quotas)), key=lambda k: (-(quotas[k] - base[k]), k))
    for k in order[:rest]:
        base[k] += 1
    return base


def split(
    units: Sequence[UnitSeries],
    pilot_fraction: float,
    seed: int,
    params: LapretParams = LapretParams(10.0, 0.2),
    aggregation: Aggregation = "mean",
    transform: Transform = "levels",
    undetected: Undetected = "zero",
    caliper: Optional[float] = None,
) -> StudyPlan:
    """Random pilot/main split, stratified by event indicator.

    The pilot gets ``round(pilot_fraction * n)`` units, apportioned across the
    treated and control strata, with at least one of each on both sides.
    """
    if not 0 < pilot_fraction < 1:
        raise ValidationError(f"pilot_fraction must lie in (0, 1), got {pilot_fraction}")
    strata = [
        sorted(u.unit_id for u in units if u.event_indicator == 1),
        sorted(u.unit_id for u in units if u.event_indicator == 0),
    ]
    if min(len(s) for s in strata) < 2:
        raise TooFewUnits("need at least 2 treated and 2 control units to split")
    n = sum(len(s) for s in strata)
    n_pilot = min(max(round(pilot_fraction * n), 2), n - 2)
    sizes = np.array([len(s) for s in strata], dtype=float)
    counts = _largest_remainder(sizes * n_pilot / n, n_pilot)
    # both halves need both strata
    for k in range(2):
        other = 1 - k
        if counts[k] < 1:
            counts[k] += 1
            counts[other] -= 1
        elif counts[k] > sizes[k] - 1:
            counts[k] -= 1
            counts[other] += 1

    rng = np.random.default_rng(seed)
    pilot = set()
    for ids, k in zip(strata, counts):
        chosen = rng.permutation(len(ids))[:k]
        pilot.update(ids[i] for i in chosen)
    main = {i for s in strata for i in s} - pilot
    return StudyPlan(frozenset(pilot), frozenset(main), params, aggregation, transform, seed, undetected, caliper)


def prepare(units: Iterable[UnitSeries], transform: Transform) -> list[UnitSeries]:
    if transform == "levels":
        return list(units)
    if transform == "lagged_diff":
        return [u.lagged_diff() for u in units]
    raise ValidationError(f"unknown transform {transform!r}")


def _match_units(units: Sequence[UnitSeries], caliper: Optional[float]) -> MatchSet:
    n_treated = sum(u.event_indicator for u in units)
    if n_treated == 0 or n_treated == len(units):
        raise TooFewUnits(f"{n_treated} treated of {len(units)} units; matching needs both groups")
    try:
        model = fit_propensity(units)
    except NoVariation as exc:
        raise TooFewUnits(str(exc)) from exc
    if not model.converged:
        log.warning("propensity fit stopped after %d iterations without converging", model.iterations)
    return match(units, model, caliper)


def _select(units: Sequence[UnitSeries], ids: frozenset) -> list[UnitSeries]:
    chosen = [u for u in units if u.unit_id in ids]
    missing = ids - {u.unit_id for u in chosen}
    if missing:
        raise ValidationError(f"{len(missing)} planned unit ids are absent from the data")
    return sorted(chosen, key=lambda u: u.unit_id)


def run_pilot(units: Sequence[UnitSeries], plan: StudyPlan) -> PilotResult:
    pilot_units = prepare(_select(units, plan.pilot_unit_ids), plan.transform)
    ms = _match_units(pilot_units, plan.caliper)
    by_id = {u.unit_id: u for u in pilot_units}
    per_pair = []
    skipped = 0
    for pid, (t_id, c_id) in enumerate(ms.pairs):
        pair = build_pair(by_id[t_id], by_id[c_id], pid)
        try:
            per_pair.append(estimate_pair_lapret(pair, plan.params))
        except WindowTooShort:
            skipped += 1
    if skipped:
        log.info("skipped %d pilot pairs whose event leaves too short a pre-event window", skipped)
    return aggregate(per_pair, plan.aggregation, plan.undetected, plan.pilot_unit_ids)


def _window_values(unit: UnitSeries, lo: int, hi: int, lag: int) -> np.ndarray:
    """Analysis-scale values on days lo..hi, NaN where the unit has no data."""
    out = np.full(hi - lo + 1, np.nan)
    read_lo = max(lo - lag, unit.first_day)
    read_hi = min(hi, unit.last_day)
    if read_hi < read_lo + lag:
        return out
    raw = unit.values(read_lo, read_hi)
    vals = np.diff(raw) if lag else raw
    start = read_lo + lag
    out[start - lo : start - lo + vals.size] = vals
    return out


def run_main(
    units: Sequence[UnitSeries],
    plan: StudyPlan,
    pilot: PilotResult,
    main_ids: Optional[Iterable[Hashable]] = None,
) -> StudyResult:
    """Per-relative-day effects on the main sample, inside the causal window.

    Only days ``event - window .. event`` of each main-study unit are read
    (one extra leading day under lagged differences, to form the first
    change).
    """
    ids = plan.main_unit_ids if main_ids is None else frozenset(main_ids)
    overlap = ids & (plan.pilot_unit_ids | pilot.unit_ids)
    if overlap:
        raise PilotOverlap(f"{len(overlap)} main-study units were used in the pilot, e.g. {sorted(overlap)[0]!r}")
    main_units = _select(units, ids)
    ms = _match_units(main_units, plan.caliper)
    by_id = {u.unit_id: u for u in main_units}

    window = pilot.causal_window_days
    lag = 1 if plan.transform == "lagged_diff" else 0
    deltas = []
    for t_id, c_id in ms.pairs:
        treated, control = by_id[t_id], by_id[c_id]
        ev = treated.event_time
        lo = ev - window
        deltas.append(_window_values(treated, lo, ev, lag) - _window_values(control, lo, ev, lag))
    if not deltas:
        raise EmptyWindow("no matched pairs in the main study")
    deltas = np.array(deltas)

    effects = []
    for k, tau in enumerate(range(-window, 1)):
        col = deltas[:, k]
        col = col[~np.isnan(col)]
        if col.size == 0:
            raise EmptyWindow(f"no pair has data at relative day {tau}")
        est = float(col.mean())
        half = Z_95 * float(col.std(ddof=1)) / math.sqrt(col.size) if col.size > 1 else 0.0
        effects.append(EffectEstimate(tau, est, est - half, est + half, int(col.size)))
    return StudyResult(pilot, tuple(effects), window, len(ms.pairs))


def run_study(units: Sequence[UnitSeries], plan: StudyPlan) -> StudyResult:
    return run_main(units, plan, run_pilot(units, plan))


def sensitivity_sweep(
    datasets: Sequence[tuple[str, Sequence[UnitSeries]]],
    pilot_fraction: float,
    params: LapretParams,
    seed: int = 0,
    seeds: Optional[Sequence[int]] = None,
    **plan_kwargs,
) -> list[tuple[str, StudyResult]]:
    """Full pilot + main run per data set, one fresh split seed each."""
    if not datasets:
        raise ValidationError("sensitivity sweep needs at least one data set")
    if seeds is None:
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(datasets))]
    if len(seeds) != len(datasets):
        raise ValidationError("one seed per data set")
    out = []
    for (label, units), s in zip(datasets, seeds):
        plan = split(units, pilot_fraction, s, params, **plan_kwargs)
        out.append((label, run_study(units, plan)))
    return out
