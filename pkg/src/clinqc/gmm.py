"""Two-component Gaussian mixture segmentation with median smoothing.

The simpler quality-control path: fit a GMM to the scalar feature by E-M,
assign each time point to its most probable component, smooth the indicator
sequence with a repeated moving median, and orient components to adherence
or violation by comparing component means.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateComponent,
    EqualMeans,
    EvenWindow,
    TooFewPoints,
    ValidationError,
)
from .series import ADHERENCE, VIOLATION, AdherenceLabels, ScalarSeries, StateSequence

_LOG_2PI = float(np.log(2.0 * np.pi))


class TestKind(enum.Enum):
    WALKING = "walking"
    BALANCE = "balance"
    VOICE = "voice"


@dataclass
class GmmParams:
    """One-dimensional Gaussian mixture parameters."""

    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        k = len(self.means)
        if len(self.variances) != k or len(self.weights) != k:
            raise ValidationError("means, variances and weights must share length")
        if np.any(self.variances <= 0):
            raise ValidationError("variances must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValidationError("weights must form a simplex")

    @property
    def n_components(self) -> int:
        return len(self.means)


def _log_responsibilities(params: GmmParams, x: np.ndarray) -> np.ndarray:
    """Unnormalized per-component log posteriors, shape (T, K)."""
    log_w = np.log(params.weights)
    diff = x[:, None] - params.means[None, :]
    return (log_w[None, :]
            - 0.5 * (_LOG_2PI + np.log(params.variances))[None, :]
            - 0.5 * diff ** 2 / params.variances[None, :])


def _log_likelihood(params: GmmParams, x: np.ndarray) -> float:
    lr = _log_responsibilities(params, x)
    m = lr.max(axis=1)
    return float(np.sum(m + np.log(np.sum(np.exp(lr - m[:, None]), axis=1))))


def _quantile_init(x: np.ndarray, k: int, jitter: np.ndarray) -> GmmParams:
    # Split the sorted data into K equal chunks and use chunk statistics.
    order = np.sort(x)
    chunks = np.array_split(order, k)
    means = np.array([c.mean() for c in chunks]) + jitter
    var = max(float(np.var(x)), 1e-12)
    return GmmParams(means=means,
                     variances=np.full(k, var),
                     weights=np.full(k, 1.0 / k))


def fit_gmm_em(data: ScalarSeries, n_components: int = 2, seed: int = 0,
               tolerance: float = 1e-8, max_iter: int = 500,
               n_restarts: int = 5) -> tuple[GmmParams, np.ndarray]:
    """Fit a 1-D GMM by expectation-maximization.

    Returns the parameters and the (T, K) responsibility matrix of the best
    restart. The log-likelihood is checked to be non-decreasing on every
    iteration.
    """
    x = data.values
    k = n_components
    if k < 1:
        raise ValidationError("need at least one component")
    if len(x) < 10 * k:
        raise TooFewPoints(f"need at least {10 * k} points for K={k}")
    data_var = float(np.var(x))
    if data_var == 0 and k > 1:
        raise DegenerateComponent("all data points identical")
    var_floor = max(1e-8 * data_var, 1e-300)
    rng = np.random.default_rng(seed)

    best: tuple[float, GmmParams, np.ndarray] | None = None
    for restart in range(n_restarts):
        scale = float(np.std(x)) if restart > 0 else 0.0
        jitter = rng.normal(0.0, 0.1 * scale, size=k) if restart > 0 else np.zeros(k)
        params = _quantile_init(x, k, jitter)
        prev_ll = -np.inf
        resp = None
        for _ in range(max_iter):
            lr = _log_responsibilities(params, x)
            m = lr.max(axis=1)
            ll = float(np.sum(m + np.log(np.sum(np.exp(lr - m[:, None]), axis=1))))
            if ll < prev_ll - 1e-9 * max(abs(prev_ll), 1.0):
                raise AssertionError("E-M log-likelihood decreased")
            resp = np.exp(lr - lr.max(axis=1)[:, None])
            resp /= resp.sum(axis=1)[:, None]

            nk = resp.sum(axis=0)
            if np.any((nk / len(x)) < 1e-6) and k > 1:
                raise DegenerateComponent("component weight collapsed")
            means = resp.T @ x / nk
            variances = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
            variances = np.maximum(variances, var_floor)
            params = GmmParams(means=means, variances=variances, weights=nk / len(x))
            if ll - prev_ll < tolerance * max(abs(ll), 1.0):
                prev_ll = ll
                break
            prev_ll = ll
        if best is None or prev_ll > best[0]:
            best = (prev_ll, params, resp)
    assert best is not None
    return best[1], best[2]


def map_assign(params: GmmParams, data: ScalarSeries) -> StateSequence:
    """Assign each point to its most probable component.

    Ties break toward the lower component index (argmax on exact equality).
    """
    lr = _log_responsibilities(params, data.values)
    post = np.exp(lr - lr.max(axis=1)[:, None])
    post /= post.sum(axis=1)[:, None]
    return StateSequence(indicators=np.argmax(lr, axis=1), posteriors=post)


def _median_pass(values: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    padded = np.concatenate([np.repeat(values[0], half), values,
                             np.repeat(values[-1], half)])
    stacked = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(stacked, axis=1).astype(values.dtype)


def median_smooth_to_convergence(states: StateSequence, window: int,
                                 max_passes: int = 100) -> StateSequence:
    """Repeat a moving median over the indicators until a pass changes nothing.

    Edges are handled by replicating the boundary value.
    """
    if window < 3 or window % 2 == 0:
        raise EvenWindow("window must be odd and >= 3")
    values = states.indicators.copy()
    for _ in range(max_passes):
        smoothed = _median_pass(values, window)
        if np.array_equal(smoothed, values):
            break
        values = smoothed
    return StateSequence(indicators=values)


def mean_rule_adherence(params: GmmParams, smoothed: StateSequence,
                        kind: TestKind, rate: float) -> AdherenceLabels:
    """Orient the two components to adherence/violation by their means.

    Walking and voice tests: the larger-mean component is adherence. Balance
    tests: the larger-mean component is violation.
    """
    if params.n_components != 2:
        raise ValidationError("adherence orientation requires exactly 2 components")
    mu = params.means
    if abs(mu[0] - mu[1]) < 1e-9:
        raise EqualMeans("component means coincide; cannot orient labels")
    larger = int(np.argmax(mu))
    if kind in (TestKind.WALKING, TestKind.VOICE):
        label_of_larger = ADHERENCE
    else:
        label_of_larger = VIOLATION
    other = VIOLATION if label_of_larger == ADHERENCE else ADHERENCE
    labels = np.where(smoothed.indicators == larger, label_of_larger, other)
    return AdherenceLabels(rate=rate, labels=labels)
