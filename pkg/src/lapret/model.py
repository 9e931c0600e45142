"""Shared data model: unit series, matched pairs, potential outcomes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Optional

import numpy as np

from .errors import InvalidEta, OverlapTooShort, RoleMismatch, ValidationError


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UnitSeries:
    """One unit's daily outcomes plus its covariates and event proxy.

    Outcomes cover the contiguous day range ``first_day .. last_day``.
    ``first_day`` is 1 for raw data; transformed series (lagged differences)
    start later.
    """

    unit_id: Hashable
    outcomes: np.ndarray
    covariates: np.ndarray
    event_indicator: int
    event_time: Optional[int] = None
    first_day: int = 1

    def __post_init__(self):
        object.__setattr__(self, "outcomes", _frozen(self.outcomes))
        object.__setattr__(self, "covariates", _frozen(self.covariates))
        if self.outcomes.ndim != 1 or self.outcomes.size == 0:
            raise ValidationError(f"unit {self.unit_id}: outcomes must be a non-empty 1-d series")
        if self.first_day < 1:
            raise ValidationError(f"unit {self.unit_id}: days start at 1")
        if self.event_indicator not in (0, 1):
            raise ValidationError(f"unit {self.unit_id}: event_indicator must be 0 or 1")
        if self.event_indicator == 1:
            if self.event_time is None:
                raise ValidationError(f"unit {self.unit_id}: event_time required when event_indicator = 1")
            if not self.first_day <= self.event_time <= self.last_day:
                raise ValidationError(
                    f"unit {self.unit_id}: event_time {self.event_time} outside "
                    f"[{self.first_day}, {self.last_day}]"
                )
        elif self.event_time is not None:
            raise ValidationError(f"unit {self.unit_id}: controls carry no event_time")

    @property
    def last_day(self) -> int:
        return self.first_day + self.outcomes.size - 1

    @property
    def days(self) -> np.ndarray:
        return np.arange(self.first_day, self.last_day + 1)

    def values(self, lo: int, hi: int) -> np.ndarray:
        """Outcomes on days ``lo..hi`` inclusive.

        Every read of outcome data in the study pipeline goes through here.
        """
        if lo < self.first_day or hi > self.last_day or lo > hi:
            raise ValidationError(
                f"unit {self.unit_id}: days [{lo}, {hi}] outside [{self.first_day}, {self.last_day}]"
            )
        return self.outcomes[lo - self.first_day : hi - self.first_day + 1]

    def outcome_map(self) -> dict[int, float]:
        return {int(d): float(v) for d, v in zip(self.days, self.outcomes)}

    def lagged_diff(self) -> "UnitSeries":
        """Day-over-day changes; the first day is dropped."""
        if self.outcomes.size < 2:
            raise ValidationError(f"unit {self.unit_id}: need 2 days for a lagged difference")
        if self.event_time is not None and self.event_time == self.first_day:
            raise ValidationError(f"unit {self.unit_id}: event on the dropped first day")
        return UnitSeries(
            self.unit_id,
            np.diff(self.outcomes),
            self.covariates,
            self.event_indicator,
            self.event_time,
            self.first_day + 1,
        )

    def with_outcomes(self, outcomes) -> "UnitSeries":
        return UnitSeries(
            self.unit_id, outcomes, self.covariates, self.event_indicator, self.event_time, self.first_day
        )


@dataclass(frozen=True)
class TreatmentAssignment:
    unit_id: Hashable
    z: int
    replicate_index: int


@dataclass(frozen=True, eq=False)
class MatchedPair:
    """Treated/control pairing with the outcome difference series.

    ``delta[k]`` is treated minus control on ``days[k]``; ``ddelta[k]`` is the
    backward difference ``delta[k] - delta[k-1]`` and is NaN at ``k = 0``.
    """

    pair_id: int
    treated: UnitSeries
    control: UnitSeries
    days: np.ndarray
    delta: np.ndarray
    ddelta: np.ndarray
    event_time: int

    def delta_map(self) -> dict[int, float]:
        return {int(d): float(v) for d, v in zip(self.days, self.delta)}

    def ddelta_map(self) -> dict[int, float]:
        return {int(d): float(v) for d, v in zip(self.days[1:], self.ddelta[1:])}


@dataclass(frozen=True, eq=False)
class PotentialOutcomePair:
    """Both potential outcome series of one simulated unit.

    The unobservable treatment time is not stored; by construction it falls at
    or before ``true_lapret``.
    """

    control_surface: np.ndarray
    treated_surface: np.ndarray
    true_lapret: Optional[int]
    true_event_time: int
    first_day: int = 1

    def __post_init__(self):
        object.__setattr__(self, "control_surface", _frozen(self.control_surface))
        object.__setattr__(self, "treated_surface", _frozen(self.treated_surface))
        if self.control_surface.shape != self.treated_surface.shape:
            raise ValidationError("potential outcome surfaces must share the day range")
        if self.true_lapret is not None and not self.true_lapret < self.true_event_time:
            raise ValidationError("true_lapret must precede true_event_time")


MIN_OVERLAP = 3


def build_pair(treated: UnitSeries, control: UnitSeries, pair_id: int) -> MatchedPair:
    if treated.event_indicator != 1 or treated.event_time is None:
        raise RoleMismatch(f"unit {treated.unit_id} is not a treated unit")
    if control.event_indicator != 0:
        raise RoleMismatch(f"unit {control.unit_id} is not a control unit")
    lo = max(treated.first_day, control.first_day)
    hi = min(treated.last_day, control.last_day)
    if hi - lo + 1 < MIN_OVERLAP:
        raise OverlapTooShort(
            f"pair ({treated.unit_id}, {control.unit_id}) shares {max(hi - lo + 1, 0)} days, need {MIN_OVERLAP}"
        )
    delta = treated.values(lo, hi) - control.values(lo, hi)
    ddelta = np.empty_like(delta)
    ddelta[0] = np.nan
    ddelta[1:] = np.diff(delta)
    return MatchedPair(
        pair_id=pair_id,
        treated=treated,
        control=control,
        days=_frozen(np.arange(lo, hi + 1), dtype=int),
        delta=_frozen(delta),
        ddelta=_frozen(ddelta),
        event_time=treated.event_time,
    )


def impute_matrix(indicators, eta: float, replicates: int, seed: int) -> np.ndarray:
    """Imputed treatment indicators, one row per replicate.

    Each indicator is flipped independently with probability ``eta / 2``,
    which puts cor(Z, D) at ``1 - eta`` for a balanced indicator.
    """
    if not (0.0 <= eta < 1.0):
        raise InvalidEta(f"eta must lie in [0, 1), got {eta}")
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    d = np.asarray(indicators, dtype=np.int8)
    rng = np.random.default_rng(seed)
    flips = rng.random((replicates, d.size)) < eta / 2
    return d[None, :] ^ flips.astype(np.int8)


def impute_treatment(units: list[UnitSeries], eta: float, replicates: int, seed: int) -> list[TreatmentAssignment]:
    z = impute_matrix([u.event_indicator for u in units], eta, replicates, seed)
    return [
        TreatmentAssignment(u.unit_id, int(z[r, i]), r)
        for r in range(replicates)
        for i, u in enumerate(units)
    ]
