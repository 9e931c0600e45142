"""Propensity-score estimation and greedy 1:1 nearest-neighbour matching."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NoVariation, SingularDesign, ValidationError
from .model import UnitSeries

RIDGE = 1e-6
MAX_ITER = 200
TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """Logistic model on standardized covariates.

    ``coefficients[0]`` is the intercept; the rest apply to the covariates
    after subtracting ``center`` and dividing by ``scale``.
    """

    coefficients: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    converged: bool
    iterations: int

    @property
    def dim(self) -> int:
        return self.coefficients.size - 1

    def logit(self, covariates) -> np.ndarray:
        x = np.atleast_2d(np.asarray(covariates, dtype=float))
        if x.shape[1] != self.dim:
            raise DimensionMismatch(f"model expects {self.dim} covariates, got {x.shape[1]}")
        z = (x - self.center) / self.scale
        return self.coefficients[0] + z @ self.coefficients[1:]

    def score(self, covariates) -> np.ndarray:
        return _sigmoid(self.logit(covariates))


@dataclass(frozen=True)
class MatchSet:
    pairs: list[tuple[Hashable, Hashable]]
    unmatched_treated: list[Hashable]
    caliper: Optional[float] = None


def _sigmoid(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def penalized_nll(beta, X, y, ridge=RIDGE) -> float:
    eta = X @ beta
    # log(1 + e^eta) - y * eta, computed stably
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * ridge * beta @ beta)


def design_matrix(covariates: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    center = covariates.mean(axis=0)
    scale = covariates.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    z = (covariates - center) / scale
    return np.column_stack([np.ones(len(z)), z]), center, scale


def fit_propensity(units: Sequence[UnitSeries], ridge: float = RIDGE, max_iter: int = MAX_ITER) -> PropensityModel:
    """Ridge-penalized logistic regression of the event indicator, fit by IRLS.

    The penalty applies to every coefficient, intercept included, so the
    objective is strictly convex and has a finite minimizer even under
    complete separation.
    """
    if not units:
        raise ValidationError("no units to fit")
    y = np.array([u.event_indicator for u in units], dtype=float)
    if y.min() == y.max():
        raise NoVariation("all units share one event_indicator value")
    cov = np.array([u.covariates for u in units], dtype=float)
    if cov.ndim != 2:
        raise DimensionMismatch("covariate vectors differ in length")
    if not np.all(np.isfinite(cov)):
        raise ValidationError("covariates must be finite")

    X, center, scale = design_matrix(cov)
    beta = np.zeros(X.shape[1])
    obj = penalized_nll(beta, X, y, ridge)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(X @ beta)
        w = p * (1.0 - p)
        grad = X.T @ (y - p) - ridge * beta
        hess = (X * w[:, None]).T @ X + ridge * np.eye(X.shape[1])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign("penalized normal equations are singular") from exc
        if not np.all(np.isfinite(step)):
            raise SingularDesign("penalized normal equations are numerically singular")
        # step halving keeps each Newton update a descent step
        t = 1.0
        while True:
            cand = beta + t * step
            cand_obj = penalized_nll(cand, X, y, ridge)
            if cand_obj <= obj or t < 1e-12:
                break
            t *= 0.5
        beta, obj = cand, cand_obj
        if np.max(np.abs(t * step)) < TOL * (1.0 + np.max(np.abs(beta))):
            converged = True
            break
    return PropensityModel(beta, center, scale, converged, it)


def processing_order(scores, ids: Sequence[Hashable]) -> list[int]:
    """Indices of treated units by descending score, ties by smallest id."""
    scores = np.asarray(scores, dtype=float)
    return sorted(range(len(ids)), key=lambda k: (-scores[k], ids[k]))


def match(units: Sequence[UnitSeries], model: PropensityModel, caliper: Optional[float] = None) -> MatchSet:
    """Greedy nearest-neighbour matching on the logit, without replacement.

    Treated units are visited by descending propensity; each takes the
    closest remaining control (ties to the smallest control id). A pair
    further apart than ``caliper`` leaves the treated unit unmatched.
    """
    treated = [u for u in units if u.event_indicator == 1]
    control = sorted((u for u in units if u.event_indicator == 0), key=lambda u: u.unit_id)
    for u in units:
        if u.covariates.size != model.dim:
            raise DimensionMismatch(f"unit {u.unit_id}: {u.covariates.size} covariates, model has {model.dim}")
    if not treated or not control:
        return MatchSet([], [u.unit_id for u in treated], caliper)

    t_logit = model.logit([u.covariates for u in treated])
    c_logit = model.logit([u.covariates for u in control])
    available = np.ones(len(control), dtype=bool)
    pairs, unmatched = [], []
    for k in processing_order(t_logit, [u.unit_id for u in treated]):
        if not available.any():
            unmatched.append(treated[k].unit_id)
            continue
        dist = np.where(available, np.abs(c_logit - t_logit[k]), np.inf)
        j = int(np.argmin(dist))  # controls are id-sorted, so argmin breaks ties by id
        if caliper is not None and dist[j] > caliper:
            unmatched.append(treated[k].unit_id)
            continue
        available[j] = False
        pairs.append((treated[k].unit_id, control[j].unit_id))
    return MatchSet(pairs, unmatched, caliper)
