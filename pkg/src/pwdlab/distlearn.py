"""Robust, list-output distribution learning.

A single fit run lands close to the target with constant probability even
when its input stream is slightly perturbed (a Le Cam two-point argument);
repeating r = ceil(log(1/delta)/log(4/3)) times and returning the whole list
amplifies that to probability 1 - delta. On top of this sit two learners:
separate-and-learn splits oracle draws by a hypothesis and fits each side,
and the direct learner fits the unconditional outcome stream, which is
accurate whenever the mixture is sufficiently unhealthy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    DistributionSpec,
    FamilyShape,
    default_spec,
    fit_single,
    kl_divergence,
)
from .errors import InsufficientSampleError
from .model import Concept, HypothesisModel, TargetModel, gen_sample_arrays


@dataclass(frozen=True)
class RobustnessBudget:
    """Amplification plan: r repetitions of a size-m_p base fit.

    ``kl_tolerance`` is the stream perturbation the plan tolerates:
    KL(target || stream) <= 1/(2 m_p) keeps each repetition a constant-
    probability success.
    """

    m_p: int
    r: int
    kl_tolerance: float

    def __post_init__(self):
        if self.m_p < 1 or self.r < 1:
            raise ValueError("m_p and r must be positive")
        if not self.kl_tolerance > 0.0:
            raise ValueError("kl_tolerance must be positive")

    @classmethod
    def for_delta(cls, m_p: int, delta: float) -> "RobustnessBudget":
        """Smallest r with (3/4)^r <= delta; requires delta <= 1/4."""
        if not (0.0 < delta <= 0.25):
            raise ValueError(f"amplification needs delta in (0, 1/4], got {delta}")
        r = math.ceil(math.log(1.0 / delta) / math.log(4.0 / 3.0))
        return cls(m_p=int(m_p), r=r, kl_tolerance=1.0 / (2.0 * m_p))


def robust_learn_list(
    ys: np.ndarray, shape: FamilyShape, budget: RobustnessBudget
) -> list[DistributionSpec]:
    """Fit r specs on r disjoint chunks of size m_p; return all of them.

    With probability at least 1 - delta some entry is epsilon-close to the
    target, provided the stream is within the budget's KL tolerance of it.
    """
    ys = np.asarray(ys)
    need = budget.r * budget.m_p
    if ys.shape[0] < need:
        raise InsufficientSampleError(
            f"robust learning needs {need} observations, got {ys.shape[0]}"
        )
    return [
        fit_single(shape, ys[i * budget.m_p : (i + 1) * budget.m_p])
        for i in range(budget.r)
    ]


def two_point_test(
    ys: np.ndarray, reference: DistributionSpec, shape: FamilyShape, epsilon: float
) -> int:
    """The tester built from the base learner: fit, then accept/reject.

    Returns 0 when the fitted spec lands within epsilon (in KL) of the
    reference, 1 otherwise. Any such tester obeys the two-point lower bound
    on its summed error probabilities under nearby stream distributions.
    """
    fitted = fit_single(shape, ys)
    return 0 if kl_divergence(reference, fitted) <= epsilon else 1


@dataclass(frozen=True)
class SeparateResult:
    """Outcome of separate-and-learn for one hypothesis."""

    models: tuple[HypothesisModel, ...]
    specs0: tuple[DistributionSpec, ...]
    specs1: tuple[DistributionSpec, ...]
    draws_requested: int
    draws_used: int
    side_counts: tuple[int, int]
    starved: tuple[bool, bool]


def _amplified_side(
    ys: np.ndarray, shape: FamilyShape, m_p: int, r: int
) -> tuple[tuple[DistributionSpec, ...], bool]:
    if ys.shape[0] < m_p:
        return (default_spec(shape),), True
    runs = min(r, ys.shape[0] // m_p)
    side_budget = RobustnessBudget(m_p=m_p, r=runs, kl_tolerance=1.0 / (2.0 * m_p))
    return tuple(robust_learn_list(ys, shape, side_budget)), False


def separate_and_learn(
    target: TargetModel,
    h: Concept,
    epsilon: float,
    delta: float,
    shape: FamilyShape,
    rng: np.random.Generator,
    m_p: int = 2000,
    side_floor: float = 0.05,
    n_cap: int = 200_000,
    budget=None,
) -> SeparateResult:
    """Split oracle draws by h(x) and fit each side with amplification.

    The draw count follows 4 r m_p / floor with floor the larger of
    epsilon/(2M) and ``side_floor``, capped at ``n_cap`` (the cap and the
    request are both reported). A side with fewer than m_p points emits the
    fixed default spec; the model list is the cross product of the two side
    lists, all sharing h.
    """
    rb = RobustnessBudget.for_delta(m_p, min(delta, 0.25))
    m_cap = shape.budget().m_cap
    floor = max(epsilon / (2.0 * m_cap), side_floor)
    requested = math.ceil(4.0 * rb.r * m_p / floor)
    n = min(requested, n_cap)
    if budget is not None:
        budget.spend(n)
    X, Y = gen_sample_arrays(target, n, rng)
    side = h.evaluate(X).astype(bool)
    ys0 = Y[~side]
    ys1 = Y[side]
    specs0, starved0 = _amplified_side(ys0, shape, m_p, rb.r)
    specs1, starved1 = _amplified_side(ys1, shape, m_p, rb.r)
    models = tuple(
        HypothesisModel(hypothesis=h, q0=s0, q1=s1) for s0 in specs0 for s1 in specs1
    )
    return SeparateResult(
        models=models,
        specs0=specs0,
        specs1=specs1,
        draws_requested=requested,
        draws_used=n,
        side_counts=(int(ys0.shape[0]), int(ys1.shape[0])),
        starved=(starved0, starved1),
    )


def direct_unhealthy_learn(
    target: TargetModel,
    epsilon: float,
    delta: float,
    shape: FamilyShape,
    rng: np.random.Generator,
    m_p: int = 2000,
    budget=None,
) -> list[DistributionSpec]:
    """Fit the unconditional outcome stream with amplification.

    When the mixture over outcomes is eta-unhealthy for eta below
    1/g(k, 1/eps, 1/delta) with g = max(2 M m_p / eps, 2 m_p), some entry of
    the returned list predicts within epsilon regardless of the context.
    """
    rb = RobustnessBudget.for_delta(m_p, min(delta, 0.25))
    need = rb.r * rb.m_p
    if budget is not None:
        budget.spend(need)
    _, Y = gen_sample_arrays(target, need, rng)
    return robust_learn_list(Y, shape, rb)


def unhealthy_threshold(
    epsilon: float, m_p: int, m_cap: float
) -> float:
    """1/g with g = max(2 M m_p / eps, 2 m_p), the direct-path guarantee level."""
    g = max(2.0 * m_cap * m_p / epsilon, 2.0 * m_p)
    return 1.0 / g
