"""Distinguishing-event machinery.

An event is a measurable subset of outcome space; it is xi-distinguishing for
P and Q when |P(E) - Q(E)| >= xi. Three kinds ship:

* coordinate-equals 1[y_j = t] for discrete products,
* coordinate-threshold 1[y_j >= t] for Gaussians,
* likelihood-ratio E(P, Q, tau) = {y : P(y) >= 2^tau Q(y)}.

Likelihood-ratio thresholds are compared in log space; equality is inside
the event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .distributions import (
    BARY_PRODUCT,
    BERNOULLI_PRODUCT,
    LOG2E,
    SPHERICAL_GAUSSIAN,
    DistributionSpec,
    FamilyShape,
    check_compatible,
    enumerate_outcomes,
    log_density,
    pmf_vector,
    sample,
)
from .errors import ExactComputationError

COORDINATE_EQUALS = "coordinate-equals"
COORDINATE_THRESHOLD = "coordinate-threshold"
LIKELIHOOD_RATIO = "likelihood-ratio"


@dataclass(frozen=True)
class Event:
    """A measurable subset of outcome space with a membership test.

    ``index`` is 1-based. Likelihood-ratio events carry the two reference
    specs and a log2 threshold tau; membership uses unclamped densities.
    """

    kind: str
    index: int | None = None
    symbol: int | None = None
    threshold: float | None = None
    p_ref: DistributionSpec | None = None
    q_ref: DistributionSpec | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.kind == COORDINATE_EQUALS:
            if self.index is None or self.index < 1 or self.symbol is None or self.symbol < 0:
                raise ValueError("coordinate-equals events need index >= 1 and symbol >= 0")
        elif self.kind == COORDINATE_THRESHOLD:
            if self.index is None or self.index < 1 or self.threshold is None:
                raise ValueError("coordinate-threshold events need index >= 1 and a threshold")
        elif self.kind == LIKELIHOOD_RATIO:
            if self.p_ref is None or self.q_ref is None or self.tau is None:
                raise ValueError("likelihood-ratio events need both references and tau")
        else:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def contains(self, y) -> np.ndarray | bool:
        """Membership of one outcome (bool) or of a (m, k) batch (bool array)."""
        arr = np.asarray(y)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if self.kind == COORDINATE_EQUALS:
            out = arr[:, self.index - 1] == self.symbol
        elif self.kind == COORDINATE_THRESHOLD:
            out = arr[:, self.index - 1] >= self.threshold
        else:
            diff = np.asarray(log_density(self.p_ref, arr)) - np.asarray(
                log_density(self.q_ref, arr)
            )
            out = diff >= self.tau
        return bool(out[0]) if single else out


@dataclass(frozen=True)
class EventClass:
    """A finite family of candidate distinguishing events.

    ``xi_bound`` is the guaranteed separation: whenever two family members
    have KL at least gamma, some event in the class separates them by at
    least xi_bound.
    """

    gamma: float
    events: tuple[Event, ...]
    xi_bound: float


def gaussian_grid_step(gamma: float, k: int, sigma: float) -> float:
    """Threshold grid spacing sqrt(2*gamma / (k*sigma^2))."""
    return math.sqrt(2.0 * gamma / (k * sigma * sigma))


def gaussian_separation_constant(sigma: float) -> float:
    """Linear lower-bound constant for the Gaussian threshold separation.

    Valid for gaps in [0, 1]: the probability a N(mu, sigma^2) coordinate
    falls in an interval of width d below its mean is at least
    d * exp(-1/(2 sigma^2)) / (sqrt(2 pi) sigma); half of that is kept as a
    conservative constant.
    """
    return math.exp(-1.0 / (2.0 * sigma * sigma)) / (2.0 * math.sqrt(2.0 * math.pi) * sigma)


def enumerate_event_class(shape: FamilyShape, gamma: float) -> EventClass:
    """Construct the parametric event class for a family shape.

    Discrete products emit all k*b coordinate-equals events with
    xi_bound = gamma^2 / (2 (k b)^2 M). Gaussians emit coordinate-threshold
    events on the grid {low, low+step, ...} with xi_bound = C * step.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if shape.is_discrete:
        events = tuple(
            Event(COORDINATE_EQUALS, index=j, symbol=t)
            for j in range(1, shape.k + 1)
            for t in range(shape.b)
        )
        m_cap = shape.budget().m_cap
        xi = gamma * gamma / (2.0 * (shape.k * shape.b) ** 2 * m_cap)
        return EventClass(gamma=gamma, events=events, xi_bound=xi)
    step = gaussian_grid_step(gamma, shape.k, shape.sigma)
    width = shape.mean_high - shape.mean_low
    n_steps = int(math.floor(width / step))
    grid = [shape.mean_low + i * step for i in range(n_steps + 1)]
    events = tuple(
        Event(COORDINATE_THRESHOLD, index=j, threshold=t)
        for j in range(1, shape.k + 1)
        for t in grid
    )
    xi = gaussian_separation_constant(shape.sigma) * step
    return EventClass(gamma=gamma, events=events, xi_bound=xi)


def likelihood_ratio_event(
    p_hat: DistributionSpec, q_hat: DistributionSpec, tau: float
) -> Event:
    """E(P, Q, tau) = {y : log2 P(y) - log2 Q(y) >= tau}."""
    check_compatible(p_hat, q_hat)
    return Event(LIKELIHOOD_RATIO, p_ref=p_hat, q_ref=q_hat, tau=float(tau))


def event_from_approximations(
    p_hat: DistributionSpec,
    q_hat: DistributionSpec,
    gamma: float,
    alpha: float,
    m_cap: float,
) -> Event | None:
    """Distinguishing event built from approximate references.

    With KL(P||P_hat) <= alpha, KL(Q||Q_hat) <= alpha and KL(P||Q) >= gamma,
    the event E(P_hat, Q_hat, b^2) with b = gamma^2/(8M) - sqrt(2 alpha)
    separates the true P and Q by at least b^4/(2M) - sqrt(2 alpha).
    Returns None when b <= 0 (approximations too loose for the construction).
    """
    b = gamma * gamma / (8.0 * m_cap) - math.sqrt(2.0 * alpha)
    if b <= 0.0:
        return None
    return likelihood_ratio_event(p_hat, q_hat, b * b)


# -- probabilities -------------------------------------------------------------


def _threshold_probability(dist: DistributionSpec, j: int, t: float) -> float:
    if dist.family == SPHERICAL_GAUSSIAN:
        return float(ndtr((dist.mean[j - 1] - t) / dist.sigma))
    if dist.family == BERNOULLI_PRODUCT:
        if t <= 0.0:
            return 1.0
        if t <= 1.0:
            return float(dist.biases[j - 1])
        return 0.0
    first = max(0, int(math.ceil(t)))
    if first <= 0:
        return 1.0
    if first >= dist.b:
        return 0.0
    return float(dist.table[j - 1, first:].sum())


def _equals_probability(dist: DistributionSpec, j: int, t: int) -> float:
    if dist.family == SPHERICAL_GAUSSIAN:
        return 0.0
    if dist.family == BERNOULLI_PRODUCT:
        if t not in (0, 1):
            return 0.0
        return float(dist.biases[j - 1] if t == 1 else 1.0 - dist.biases[j - 1])
    if t < 0 or t >= dist.b:
        return 0.0
    return float(dist.table[j - 1, t])


def _likelihood_ratio_probability_exact(dist: DistributionSpec, event: Event) -> float:
    p_ref, q_ref = event.p_ref, event.q_ref
    if dist.family in (BERNOULLI_PRODUCT, BARY_PRODUCT):
        check_compatible(dist, p_ref)
        outcomes = enumerate_outcomes(dist.structure())
        mem = event.contains(outcomes)
        return float(pmf_vector(dist, outcomes)[mem].sum())
    if p_ref.sigma != q_ref.sigma:
        raise ExactComputationError(
            "exact likelihood-ratio probability needs references with equal sigma"
        )
    check_compatible(dist, p_ref)
    # log2 P(y) - log2 Q(y) is linear: a . y + c0 with the terms below.
    s2 = p_ref.sigma * p_ref.sigma
    a = (p_ref.mean - q_ref.mean) * (LOG2E / s2)
    c0 = (np.dot(q_ref.mean, q_ref.mean) - np.dot(p_ref.mean, p_ref.mean)) * (
        LOG2E / (2.0 * s2)
    )
    mean_s = float(np.dot(a, dist.mean) + c0)
    sd_s = float(dist.sigma * np.linalg.norm(a))
    if sd_s == 0.0:
        return 1.0 if mean_s >= event.tau else 0.0
    return float(ndtr((mean_s - event.tau) / sd_s))


def event_probability(
    dist: DistributionSpec,
    event: Event,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
    draws: int = 100_000,
):
    """P(E) under dist.

    exact mode returns a float; coordinate events always admit it, and
    likelihood-ratio events do when the discrete domain enumerates or the
    Gaussian references share sigma. montecarlo mode returns
    (estimate, standard_error).
    """
    if mode == "exact":
        if event.kind == COORDINATE_EQUALS:
            return _equals_probability(dist, event.index, event.symbol)
        if event.kind == COORDINATE_THRESHOLD:
            return _threshold_probability(dist, event.index, event.threshold)
        return _likelihood_ratio_probability_exact(dist, event)
    if mode == "montecarlo":
        if rng is None:
            raise ValueError("montecarlo mode needs a generator")
        ys = sample(dist, rng, draws)
        mem = event.contains(ys)
        p = float(np.mean(mem))
        se = math.sqrt(max(p * (1.0 - p), 1e-300) / draws)
        return p, se
    raise ValueError(f"unknown event_probability mode {mode!r}")


def event_separation(
    p: DistributionSpec, q: DistributionSpec, event: Event, mode: str = "exact"
) -> float:
    """Signed separation P(E) - Q(E), exact."""
    if mode != "exact":
        raise ValueError("event_separation only supports exact mode")
    return event_probability(p, event) - event_probability(q, event)
