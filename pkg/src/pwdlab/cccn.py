"""Noisy concept labels from distinguishing events.

The randomized labeler turns event membership into a binary label whose
class-conditional noise rates sit strictly below 1/2 once the guesses
(p_hat, q_hat) for the true event probabilities are close enough. Guessing
runs over a grid of step xi/8; a finite-class ERM learner consumes the
labels. The learner list therefore always contains one hypothesis per grid
pair, with pairs whose labeling probabilities leave [0, 1] skipped and
recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DegenerateGuessError,
    InsufficientSampleError,
    InvalidLabParamsError,
)
from .events import Event
from .model import Concept, TargetModel, concepts_to_arrays, gen_sample_arrays

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class LabParams:
    """Labeling probabilities: P[label=1 | y in E] = a1, else b1.

    (a0, a1) and (b0, b1) must each form a probability vector; the guesses
    and separation that produced them ride along for diagnostics.
    """

    a0: float
    a1: float
    b0: float
    b1: float
    xi: float
    p_hat: float
    q_hat: float

    def __post_init__(self):
        for name, v in (("a0", self.a0), ("a1", self.a1), ("b0", self.b0), ("b1", self.b1)):
            if not (-_PROB_TOL <= v <= 1.0 + _PROB_TOL):
                raise InvalidLabParamsError(f"{name}={v} outside [0, 1]")
        if abs(self.a0 + self.a1 - 1.0) > _PROB_TOL or abs(self.b0 + self.b1 - 1.0) > _PROB_TOL:
            raise InvalidLabParamsError("label probabilities must be complementary")
        if self.p_hat == self.q_hat:
            raise DegenerateGuessError("p_hat and q_hat must differ")


@dataclass(frozen=True)
class NoisyLabeledExample:
    """A context with the randomized label derived from its outcome."""

    context: np.ndarray
    label: int


def lab_parameters(p_hat: float, q_hat: float, xi: float) -> LabParams:
    """Labeling probabilities for guesses (p_hat, q_hat) at separation xi.

    a0 = 1/2 + xi (p_hat + q_hat - 2) / (4 (q_hat - p_hat)) and
    b0 = 1/2 + xi (p_hat + q_hat) / (4 (q_hat - p_hat)). The estimated noise
    identity q_hat a0 + (1-q_hat) b0 = p_hat a1 + (1-p_hat) b1 = 1/2 - xi/4
    holds exactly for any non-degenerate guesses.

    Raises DegenerateGuessError when p_hat == q_hat and
    InvalidLabParamsError when |q_hat - p_hat| < xi/2 (guard) or when the
    resulting probabilities leave [0, 1].
    """
    if not (0.0 < xi <= 1.0):
        raise ValueError(f"xi must lie in (0, 1], got {xi}")
    if p_hat == q_hat:
        raise DegenerateGuessError("p_hat and q_hat must differ")
    gap = abs(q_hat - p_hat)
    if gap < xi / 2.0 - _PROB_TOL:
        raise InvalidLabParamsError(
            f"guess gap {gap:.6g} below guard xi/2 = {xi / 2:.6g}"
        )
    denom = 4.0 * (q_hat - p_hat)
    a0 = 0.5 + xi * (p_hat + q_hat - 2.0) / denom
    b0 = 0.5 + xi * (p_hat + q_hat) / denom
    return LabParams(a0=a0, a1=1.0 - a0, b0=b0, b1=1.0 - b0, xi=xi, p_hat=p_hat, q_hat=q_hat)


def estimated_noise_rate(params: LabParams) -> float:
    """The common estimated noise level 1/2 - xi/4."""
    return 0.5 - params.xi / 4.0


def noise_rates(p: float, q: float, params: LabParams) -> tuple[float, float]:
    """True class-conditional noise rates for actual event probabilities (p, q).

    eta1 = P[label=0 | c=1] = q a0 + (1-q) b0 and
    eta0 = P[label=1 | c=0] = p a1 + (1-p) b1.
    """
    eta1 = q * params.a0 + (1.0 - q) * params.b0
    eta0 = p * params.a1 + (1.0 - p) * params.b1
    return eta0, eta1


def lab_label_batch(
    membership: np.ndarray, params: LabParams, rng: np.random.Generator
) -> np.ndarray:
    """Randomized labels for a batch of event memberships; returns uint8."""
    pr1 = np.where(membership, params.a1, params.b1)
    return (rng.random(membership.shape[0]) < pr1).astype(np.uint8)


def lab_label(
    event: Event, pair, params: LabParams, rng: np.random.Generator
) -> NoisyLabeledExample:
    """Label a single oracle pair through the event."""
    member = bool(event.contains(pair.outcome))
    pr1 = params.a1 if member else params.b1
    return NoisyLabeledExample(context=pair.context, label=int(rng.random() < pr1))


# -- guess grid -----------------------------------------------------------------


@dataclass(frozen=True)
class GuessGrid:
    """All ordered guess pairs (i*delta, j*delta), i != j, covering [0, 1]."""

    delta: float
    values: tuple[float, ...]
    pairs: tuple[tuple[float, float], ...]


def guess_grid(xi: float) -> GuessGrid:
    """Grid with step delta = xi/8; values are clamped into [0, 1]."""
    if not (0.0 < xi <= 1.0):
        raise ValueError(f"xi must lie in (0, 1], got {xi}")
    delta = xi / 8.0
    count = math.ceil(1.0 / delta)
    values = tuple(min(i * delta, 1.0) for i in range(count + 1))
    pairs = tuple(
        (values[i], values[j])
        for i in range(len(values))
        for j in range(len(values))
        if i != j
    )
    return GuessGrid(delta=delta, values=values, pairs=pairs)


# -- ERM under class-conditional noise -------------------------------------------


def erm_cccn_learn(contexts: np.ndarray, labels: np.ndarray, concepts) -> Concept:
    """Minimize empirical disagreement with the noisy labels over a finite class.

    Ties break toward the smallest class index, so the result is invariant
    under permutations of the example multiset.
    """
    if len(concepts) == 0:
        raise InsufficientSampleError("concept class is empty")
    X = np.ascontiguousarray(contexts, dtype=np.uint8)
    y = np.ascontiguousarray(labels, dtype=np.uint8)
    if X.shape[0] == 0:
        raise InsufficientSampleError("no labeled examples")
    kinds, v1, v2 = concepts_to_arrays(concepts)
    counts = kernels.conjunction_disagreements(X, y, kinds, v1, v2)
    return concepts[int(np.argmin(counts))]


def m_cn_default(epsilon: float, delta: float, xi: float, n_concepts: int, n_pairs: int) -> int:
    """Per-grid-pair sample size: a conservative uniform-convergence bound
    for disagreement-minimization under noise near 1/2 - xi/4."""
    return math.ceil(
        (32.0 / (xi * epsilon * epsilon))
        * math.log(2.0 * n_concepts * n_pairs / delta)
    )


@dataclass(frozen=True)
class EventLearnResult:
    """Hypothesis list from one event: one entry per grid pair.

    Skipped pairs (guard violations or labeling probabilities outside [0,1])
    contribute the first concept of the class as a placeholder so the list
    length always equals the grid size.
    """

    grid: GuessGrid
    hypotheses: tuple[Concept, ...]
    skipped: tuple[bool, ...]
    m_per_pair: int

    @property
    def skip_count(self) -> int:
        return sum(self.skipped)


def learn_with_event(
    target: TargetModel,
    event: Event,
    xi: float,
    epsilon: float,
    delta: float,
    concepts,
    rng: np.random.Generator,
    m_override: int | None = None,
    budget=None,
) -> EventLearnResult:
    """Run the labeler plus ERM for every valid grid pair against one event.

    Each valid pair consumes a fresh oracle sample of size m (the default m
    comes from m_cn_default). Returns the full per-pair hypothesis list; the
    guarantee is only that SOME entry is accurate when the event truly
    separates the target distributions by xi.
    """
    grid = guess_grid(xi)
    params_by_pair: list[LabParams | None] = []
    for p_hat, q_hat in grid.pairs:
        try:
            params_by_pair.append(lab_parameters(p_hat, q_hat, xi))
        except (InvalidLabParamsError, DegenerateGuessError):
            params_by_pair.append(None)
    n_valid = sum(p is not None for p in params_by_pair)
    m = m_override if m_override is not None else m_cn_default(
        epsilon, delta, xi, len(concepts), len(grid.pairs)
    )
    total = m * n_valid
    if budget is not None:
        budget.spend(total)
    if total > 0:
        X, Y = gen_sample_arrays(target, total, rng)
        membership = np.asarray(event.contains(Y))
    hypotheses: list[Concept] = []
    skipped: list[bool] = []
    offset = 0
    for params in params_by_pair:
        if params is None:
            hypotheses.append(concepts[0])
            skipped.append(True)
            continue
        sl = slice(offset, offset + m)
        offset += m
        labels = lab_label_batch(membership[sl], params, rng)
        hypotheses.append(erm_cccn_learn(X[sl], labels, concepts))
        skipped.append(False)
    return EventLearnResult(
        grid=grid,
        hypotheses=tuple(hypotheses),
        skipped=tuple(skipped),
        m_per_pair=m,
    )
