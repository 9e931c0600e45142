"""The three idealized-response simulation scenarios and the d-hat parameter sweep."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import UnknownScenario, ValidationError
from .estimator import Undetected, aggregate_d, lapret_indices
from .model import PotentialOutcomePair, UnitSeries

N_DAYS = 16
DAY_GRID = np.arange(1, N_DAYS + 1)

CONTAMINATION = {
    "f1": {0: 1.0},
    "f2": {-1: 0.25, 0: 0.5, 1: 0.25},
    "f3": {-1: 0.1, 0: 0.5, 1: 0.4},
    "f4": {-1: 0.4, 0: 0.5, 1: 0.1},
}

SIGMA_GRID = (0.005, 0.01, 0.015, 0.02)
ALPHA_GRID = tuple(range(1, 97, 5))  # 1, 6, ..., 96
EPSILON_GRID = (0.0001, 0.02, 0.2, 0.3, 0.4, 0.5)
CONTAMINATION_GRID = ("f1", "f2", "f3", "f4")

SWEEP_HEADER = ("alpha", "epsilon", "sigma", "contamination", "d_hat", "d_floor", "n_detected")


def mu_bump(t):
    """Non-negative bump shared by scenarios 1 and 2."""
    t = np.asarray(t, dtype=float)
    return np.maximum(0.0, np.sin(2 * np.pi / 15 * (t - 3.5)))


def mu_wave(t):
    """Positive-then-negative response of scenario 3."""
    t = np.asarray(t, dtype=float)
    w = np.sin(3.5 * np.pi / 15 * (t - 2.5))
    zero = ((w <= 0) & (t < 4)) | ((w >= 0) & (t > 10))
    return np.where(zero, 0.0, w)


def mu_flat(t):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class SurfaceDef:
    scenario: int
    mu0: Callable
    mu1: Callable
    true_lapret: int
    true_event: int

    @property
    def d(self) -> int:
        return self.true_event - self.true_lapret


_SURFACES = {
    1: (mu_bump, 3, 14),
    2: (mu_bump, 3, 9),
    3: (mu_wave, 2, 14),
}


def surface(scenario: int) -> SurfaceDef:
    try:
        mu1, lap, ev = _SURFACES[int(scenario)]
    except (KeyError, ValueError, TypeError):
        raise UnknownScenario(f"scenario must be 1, 2 or 3, got {scenario!r}") from None
    return SurfaceDef(int(scenario), mu_flat, mu1, lap, ev)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: int
    sigma: float
    contamination: str = "f1"
    n_units: int = 600
    seed: int = 0
    # replaces the treated mean response; used for no-effect checks
    flat: bool = False

    def __post_init__(self):
        surface(self.scenario)
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValidationError(f"sigma must be finite and >= 0, got {self.sigma}")
        if self.contamination not in CONTAMINATION:
            raise ValidationError(f"unknown contamination model {self.contamination!r}")
        if self.n_units < 2 or self.n_units % 2:
            raise ValidationError("n_units must be even and >= 2")


@dataclass
class SimData:
    """One simulated data set: first half treated, second half control."""

    spec: ScenarioSpec
    potential: list[PotentialOutcomePair]
    units: list[UnitSeries]
    observed: np.ndarray  # (n_units, N_DAYS)
    event_times: np.ndarray  # (n_units // 2,) for the treated half

    def pair_deltas(self) -> np.ndarray:
        """Treated unit j minus control unit j, no matching."""
        half = self.spec.n_units // 2
        return self.observed[:half] - self.observed[half:]


def draw_contamination(rng: np.random.Generator, model: str, size: int) -> np.ndarray:
    shifts = np.array(sorted(CONTAMINATION[model]))
    probs = np.array([CONTAMINATION[model][s] for s in shifts])
    return rng.choice(shifts, size=size, p=probs)


def generate(spec: ScenarioSpec) -> SimData:
    surf = surface(spec.scenario)
    rng = np.random.default_rng(spec.seed)
    n, half = spec.n_units, spec.n_units // 2
    mu0 = surf.mu0(DAY_GRID)
    mu1 = mu0 if spec.flat else surf.mu1(DAY_GRID)
    y0 = mu0 + spec.sigma * rng.standard_normal((n, N_DAYS))
    y1 = mu1 + spec.sigma * rng.standard_normal((n, N_DAYS))
    shifts = draw_contamination(rng, spec.contamination, half)
    events = surf.true_event + shifts
    if events.min() < 1 or events.max() > N_DAYS:
        raise ValidationError("contaminated event time left the simulated day range")

    d = np.zeros(n, dtype=int)
    d[:half] = 1
    observed = np.where(d[:, None] == 1, y1, y0)
    potential, units = [], []
    for i in range(n):
        ev = int(events[i]) if d[i] else surf.true_event
        potential.append(PotentialOutcomePair(y0[i], y1[i], None if spec.flat else surf.true_lapret, ev))
        units.append(
            UnitSeries(i, observed[i], np.zeros(0), int(d[i]), int(events[i]) if d[i] else None)
        )
    return SimData(spec, potential, units, observed, events)


def d_hat_for(
    data: SimData, alpha: float, epsilon: float, undetected: Undetected = "zero"
) -> tuple[Optional[float], Optional[int], int]:
    idx = lapret_indices(data.pair_deltas(), data.event_times - 1, alpha, epsilon)
    d_vals = [None if k < 0 else int(ev - (k + 1)) for k, ev in zip(idx, data.event_times)]
    return aggregate_d(d_vals, "mean", undetected)


def cell_seed(seed: int, *coords: int) -> int:
    """Per-cell seed, independent of evaluation order."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(coords)).generate_state(1)[0])


@dataclass
class SweepResult:
    scenario: int
    rows: list[tuple]

    def column(self, name: str) -> list:
        k = SWEEP_HEADER.index(name)
        return [r[k] for r in self.rows]

    def lookup(self, alpha, epsilon, sigma, contamination) -> tuple:
        for r in self.rows:
            if r[:4] == (alpha, epsilon, sigma, contamination):
                return r
        raise KeyError((alpha, epsilon, sigma, contamination))


def sweep(
    scenario: int,
    sigma_grid: Sequence[float] = SIGMA_GRID,
    contamination_list: Sequence[str] = CONTAMINATION_GRID,
    alpha_grid: Iterable[float] = ALPHA_GRID,
    epsilon_grid: Iterable[float] = EPSILON_GRID,
    seed: int = 0,
    n_units: int = 600,
    undetected: Undetected = "zero",
) -> SweepResult:
    """d-hat for every (sigma, contamination, alpha, epsilon) cell.

    One data set is drawn per (sigma, contamination) cell and shared by the
    whole (alpha, epsilon) grid.
    """
    alpha_grid, epsilon_grid = list(alpha_grid), list(epsilon_grid)
    if not (sigma_grid and contamination_list and alpha_grid and epsilon_grid):
        raise ValidationError("sweep grids must be non-empty")
    rows = []
    for si, sigma in enumerate(sigma_grid):
        for fi, f in enumerate(contamination_list):
            spec = ScenarioSpec(scenario, sigma, f, n_units, cell_seed(seed, scenario, si, fi))
            data = generate(spec)
            for a in alpha_grid:
                for e in epsilon_grid:
                    rows.append((a, e, sigma, f, *d_hat_for(data, a, e, undetected)))
    return SweepResult(int(scenario), rows)
