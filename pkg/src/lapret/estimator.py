"""Per-pair LaPRET estimation, aggregation into d-hat, and the alpha/epsilon heuristics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import DegenerateInput, ValidationError, WindowTooShort
from .model import MatchedPair

Aggregation = Literal["mean", "min"]
Undetected = Literal["zero", "drop"]

# t < s1 < s2 <= event needs t to have a backward difference, so at least
# four days strictly before the event
MIN_PRE_EVENT_DAYS = 4


@dataclass(frozen=True)
class LapretParams:
    alpha: float
    epsilon: float

    def __post_init__(self):
        for name in ("alpha", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class PairLapret:
    pair_id: int
    lapret_day: Optional[int]
    d_i: Optional[int]


@dataclass(frozen=True)
class PilotResult:
    per_pair: tuple[PairLapret, ...]
    d_hat: Optional[float]
    d_floor: Optional[int]
    aggregation: Aggregation
    n_detected: int
    undetected: Undetected = "zero"
    unit_ids: frozenset = frozenset()

    @property
    def causal_window_days(self) -> int:
        return 0 if self.d_floor is None else max(self.d_floor, 0)


@dataclass(frozen=True)
class HeuristicRanges:
    alpha_min: float
    alpha_max: float
    epsilon_min: float
    epsilon_max: float


def lapret_indices(delta: np.ndarray, event_idx: np.ndarray, alpha: float, epsilon: float) -> np.ndarray:
    """Vectorized argmax rule over a batch of pairs.

    ``delta`` is (pairs, days) on a common day grid; ``event_idx`` holds each
    pair's event column. Returns the column of the estimated LaPRET per pair,
    or -1 where the condition set is empty.

    With L the last column <= event where |ddelta| < epsilon and B the last
    column before L where |ddelta| > epsilon, a column t qualifies for the
    "later large then small change" clause exactly when t < B.
    """
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    n_pairs, n_days = delta.shape
    event_idx = np.broadcast_to(np.asarray(event_idx, dtype=int), (n_pairs,))
    col = np.arange(n_days)[None, :]
    upto_event = col <= event_idx[:, None]

    absd = np.abs(delta)
    peak = np.where(upto_event, absd, -np.inf).max(axis=1)
    near_zero = absd < (peak / alpha)[:, None]

    dd = np.full_like(delta, np.nan)
    dd[:, 1:] = np.abs(np.diff(delta, axis=1))
    with np.errstate(invalid="ignore"):
        small = (dd < epsilon) & upto_event
        big = (dd > epsilon) & upto_event

    last_small = np.where(small, col, -1).max(axis=1)
    last_big = np.where(big & (col < last_small[:, None]), col, -1).max(axis=1)
    ok = near_zero & small & (col < last_big[:, None])
    return np.where(ok, col, -1).max(axis=1)


def estimate_pair_lapret(pair: MatchedPair, params: LapretParams) -> PairLapret:
    days = pair.days
    ev = pair.event_time
    if ev > days[-1] or ev - days[0] < MIN_PRE_EVENT_DAYS:
        raise WindowTooShort(
            f"pair {pair.pair_id}: event day {ev} leaves fewer than {MIN_PRE_EVENT_DAYS} earlier days"
        )
    idx = lapret_indices(pair.delta, np.array([ev - days[0]]), params.alpha, params.epsilon)[0]
    if idx < 0:
        return PairLapret(pair.pair_id, None, None)
    day = int(days[idx])
    return PairLapret(pair.pair_id, day, ev - day)


def aggregate_d(d_values: Sequence[Optional[int]], method: Aggregation = "mean", undetected: Undetected = "zero"):
    """Return (d_hat, d_floor, n_detected) for a list of per-pair gaps.

    ``None`` marks a pair with no detected LaPRET. Under ``undetected="zero"``
    such pairs enter the aggregate as a gap of 0 days (no causal window);
    under ``"drop"`` they are left out. Either way d_hat is absent when no
    pair detected anything.
    """
    if method not in ("mean", "min"):
        raise ValidationError(f"unknown aggregation {method!r}")
    if undetected not in ("zero", "drop"):
        raise ValidationError(f"unknown undetected policy {undetected!r}")
    present = [d for d in d_values if d is not None]
    if not present:
        return None, None, 0
    vals = present if undetected == "drop" else [0 if d is None else d for d in d_values]
    d_hat = float(sum(vals)) / len(vals) if method == "mean" else float(min(vals))
    return d_hat, math.floor(d_hat), len(present)


def aggregate(
    per_pair: Sequence[PairLapret],
    method: Aggregation = "mean",
    undetected: Undetected = "zero",
    unit_ids=frozenset(),
) -> PilotResult:
    ordered = tuple(sorted(per_pair, key=lambda p: p.pair_id))
    d_hat, d_floor, n = aggregate_d([p.d_i for p in ordered], method, undetected)
    return PilotResult(ordered, d_hat, d_floor, method, n, undetected, frozenset(unit_ids))


def _ratio_range(values: np.ndarray, what: str) -> tuple[float, float]:
    a = np.abs(values)
    if a.size < 2:
        raise DegenerateInput(f"need at least 2 pooled |{what}| values, got {a.size}")
    peak = a.max()
    mean = a.mean()
    se = a.std(ddof=1) / math.sqrt(a.size)
    if mean == 0:
        raise DegenerateInput(f"all pooled |{what}| values are zero")
    return float(peak / (mean + 3 * se)), float(peak / (mean + se))


def heuristic_ranges(pairs: Sequence[MatchedPair]) -> HeuristicRanges:
    """Suggested alpha and epsilon ranges from pooled absolute differences.

    For the pooled |delta| values: alpha in [max / (mean + 3 se), max / (mean + se)],
    se being the standard error of the mean; epsilon likewise from |ddelta|.
    """
    if not pairs:
        raise DegenerateInput("no pairs")
    delta = np.concatenate([p.delta for p in pairs])
    ddelta = np.concatenate([p.ddelta[1:] for p in pairs])
    a_lo, a_hi = _ratio_range(delta, "delta")
    e_lo, e_hi = _ratio_range(ddelta, "ddelta")
    return HeuristicRanges(a_lo, a_hi, e_lo, e_hi)
