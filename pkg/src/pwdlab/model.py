"""Problem definition: contexts, concepts, target and hypothesis models,
the generative oracle, the error functional and empirical log-loss.

A target model is a hidden concept plus two outcome distributions; the
oracle draws a context x, evaluates the concept, and emits (x, y) with
y drawn from the distribution selected by c(x). Model error is the
expected conditional KL divergence in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .distributions import (
    BoundednessBudget,
    DistributionSpec,
    check_compatible,
    entropy,
    kl_divergence,
    log_density,
    sample,
)
from .errors import DimensionMismatchError, ExactComputationError

CONSTANT_ZERO = "constant-zero"
CONSTANT_ONE = "constant-one"
DICTATOR = "dictator"
CONJUNCTION = "monotone-conjunction"

MAX_CONTEXT_ENUMERATION_BITS = 16


@dataclass(frozen=True)
class Concept:
    """A monotone conjunction (possibly empty or degenerate) over context bits.

    ``variables`` holds 1-based indices, sorted and distinct. Constants carry
    an empty index set; a dictator is a one-variable conjunction.
    """

    kind: str
    variables: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in (CONSTANT_ZERO, CONSTANT_ONE, DICTATOR, CONJUNCTION):
            raise ValueError(f"unknown concept kind {self.kind!r}")
        vs = tuple(int(v) for v in self.variables)
        if self.kind in (CONSTANT_ZERO, CONSTANT_ONE):
            if vs:
                raise ValueError("constant concepts take no variables")
        elif self.kind == DICTATOR:
            if len(vs) != 1:
                raise ValueError("dictator concepts take exactly one variable")
        else:
            if len(vs) < 1:
                raise ValueError("conjunctions need at least one variable")
        if any(v < 1 for v in vs):
            raise ValueError("variable indices are 1-based")
        if sorted(set(vs)) != sorted(vs):
            raise ValueError("variable indices must be distinct")
        object.__setattr__(self, "variables", tuple(sorted(vs)))

    def evaluate(self, contexts: np.ndarray) -> np.ndarray:
        """Evaluate on a (m, n) context matrix; returns (m,) uint8."""
        x = np.asarray(contexts)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if self.variables and max(self.variables) > x.shape[1]:
            raise DimensionMismatchError(
                f"concept uses variable {max(self.variables)} but n={x.shape[1]}"
            )
        if self.kind == CONSTANT_ZERO:
            out = np.zeros(x.shape[0], dtype=np.uint8)
        elif self.kind == CONSTANT_ONE:
            out = np.ones(x.shape[0], dtype=np.uint8)
        else:
            out = np.ones(x.shape[0], dtype=np.uint8)
            for v in self.variables:
                out &= x[:, v - 1].astype(np.uint8)
        return out if not single else out[0]


def enumerate_concepts(n: int, max_conjunction: int = 2) -> tuple[Concept, ...]:
    """The finite concept class: constants, dictators, conjunctions up to size s.

    The order is canonical and is the ERM tie-break order: constant-zero,
    constant-one, dictators ascending, then conjunctions in lexicographic
    order by size.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if max_conjunction < 1:
        raise ValueError("max_conjunction must be >= 1")
    out: list[Concept] = [Concept(CONSTANT_ZERO), Concept(CONSTANT_ONE)]
    out.extend(Concept(DICTATOR, (i,)) for i in range(1, n + 1))
    for size in range(2, max_conjunction + 1):
        out.extend(Concept(CONJUNCTION, combo) for combo in combinations(range(1, n + 1), size))
    return tuple(out)


_CONCEPT_ARRAY_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def concepts_to_arrays(concepts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encode concepts for the kernels: kind codes and 0-based variable slots.

    Only classes with conjunctions of at most two variables have a kernel
    encoding; larger conjunctions fall back to Concept.evaluate. Encodings
    are cached per concept tuple.
    """
    key = tuple(concepts)
    cached = _CONCEPT_ARRAY_CACHE.get(key)
    if cached is not None:
        return cached
    kinds = np.empty(len(concepts), dtype=np.int8)
    v1 = np.full(len(concepts), -1, dtype=np.int64)
    v2 = np.full(len(concepts), -1, dtype=np.int64)
    for i, c in enumerate(concepts):
        if c.kind == CONSTANT_ZERO:
            kinds[i] = kernels.KIND_CONST0
        elif c.kind == CONSTANT_ONE:
            kinds[i] = kernels.KIND_CONST1
        else:
            if len(c.variables) > 2:
                raise ValueError("kernel encoding supports conjunctions of size <= 2")
            kinds[i] = kernels.KIND_CONJ
            v1[i] = c.variables[0] - 1
            if len(c.variables) == 2:
                v2[i] = c.variables[1] - 1
    for arr in (kinds, v1, v2):
        arr.setflags(write=False)
    if len(_CONCEPT_ARRAY_CACHE) < 64:
        _CONCEPT_ARRAY_CACHE[key] = (kinds, v1, v2)
    return kinds, v1, v2


@dataclass(frozen=True)
class ContextDistribution:
    """Product distribution over {0,1}^n contexts; uniform is all biases 1/2."""

    kind: str
    biases: np.ndarray

    def __post_init__(self):
        if self.kind not in ("uniform", "independent-product"):
            raise ValueError(f"unknown context distribution kind {self.kind!r}")
        b = np.ascontiguousarray(self.biases, dtype=np.float64)
        if b.ndim != 1 or b.size < 1:
            raise ValueError("biases must be a nonempty vector")
        if np.any(b < 0.0) or np.any(b > 1.0):
            raise ValueError("context biases must lie in [0, 1]")
        if self.kind == "uniform" and not np.all(b == 0.5):
            raise ValueError("uniform context distribution requires all biases 1/2")
        b.setflags(write=False)
        object.__setattr__(self, "biases", b)

    @classmethod
    def uniform(cls, n: int) -> "ContextDistribution":
        return cls("uniform", np.full(n, 0.5))

    @classmethod
    def product(cls, biases) -> "ContextDistribution":
        return cls("independent-product", np.asarray(biases, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.biases.shape[0]

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if bool(np.all(self.biases == 0.5)):
            # fair bits straight from the bit generator
            total = count * self.n
            raw = np.frombuffer(rng.bytes((total + 7) // 8), dtype=np.uint8)
            return np.unpackbits(raw)[:total].reshape(count, self.n)
        u = rng.random((count, self.n), dtype=np.float32)
        return (u < self.biases).astype(np.uint8)

    def __eq__(self, other):
        if not isinstance(other, ContextDistribution):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.biases, other.biases)

    __hash__ = object.__hash__


@dataclass(frozen=True)
class TargetModel:
    """Ground truth for simulation: (c, P0, P1) plus the context distribution."""

    concept: Concept
    p0: DistributionSpec
    p1: DistributionSpec
    context_dist: ContextDistribution

    def __post_init__(self):
        check_compatible(self.p0, self.p1)


@dataclass(frozen=True)
class HypothesisModel:
    """Learner output: (h, Q0, Q1), predicting with distribution Q_{h(x)}."""

    hypothesis: Concept
    q0: DistributionSpec
    q1: DistributionSpec

    def __post_init__(self):
        check_compatible(self.q0, self.q1)


@dataclass(frozen=True)
class LabeledPair:
    """One oracle draw: a context vector and the outcome it produced."""

    context: np.ndarray
    outcome: np.ndarray


# -- the generative oracle ----------------------------------------------------


def gen_sample_arrays(
    target: TargetModel, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw count i.i.d. pairs; returns (X, Y) arrays.

    x ~ D, y ~ P_{c(x)}. Deterministic given the generator state.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    X = target.context_dist.sample(rng, count)
    cvals = target.concept.evaluate(X)
    n1 = int(cvals.sum())
    n0 = count - n1
    dtype = np.float64 if target.p0.family == "spherical-gaussian" else np.int8
    Y = np.empty((count, target.p0.k), dtype=dtype)
    if n0 > 0:
        Y[cvals == 0] = sample(target.p0, rng, n0)
    if n1 > 0:
        Y[cvals == 1] = sample(target.p1, rng, n1)
    return X, Y


def gen_sample(target: TargetModel, count: int, rng: np.random.Generator) -> list[LabeledPair]:
    """Oracle draws as a list of labeled pairs (see gen_sample_arrays)."""
    X, Y = gen_sample_arrays(target, count, rng)
    return [LabeledPair(X[i].copy(), Y[i].copy()) for i in range(count)]


# -- exact joint probabilities -------------------------------------------------


def concept_probability(concept: Concept, dist: ContextDistribution) -> float:
    """Pr_D[c(x) = 1] under a product context distribution."""
    if concept.kind == CONSTANT_ZERO:
        return 0.0
    if concept.kind == CONSTANT_ONE:
        return 1.0
    idx = np.array(concept.variables) - 1
    if idx.size and idx.max() >= dist.n:
        raise DimensionMismatchError("concept variable out of range for context distribution")
    return float(np.prod(dist.biases[idx]))


def _conjunction_pair_probability(c: Concept, h: Concept, dist: ContextDistribution) -> float:
    """Pr[c=1 and h=1] for conjunction-like concepts under product D."""
    if c.kind == CONSTANT_ZERO or h.kind == CONSTANT_ZERO:
        return 0.0
    union = sorted(set(c.variables) | set(h.variables))
    if not union:
        return 1.0
    idx = np.array(union) - 1
    return float(np.prod(dist.biases[idx]))


def joint_cells(
    c: Concept, h: Concept, dist: ContextDistribution, mode: str = "closed-form"
) -> np.ndarray:
    """Exact 2x2 joint cells[i, j] = Pr_D[c(x)=i and h(x)=j].

    closed-form uses inclusion-exclusion for conjunctions under product D
    (valid for the whole shipped concept class); enumeration walks all 2^n
    contexts and requires n <= 16.
    """
    if mode == "closed-form":
        pc = concept_probability(c, dist)
        ph = concept_probability(h, dist)
        both = _conjunction_pair_probability(c, h, dist)
        cells = np.array(
            [[1.0 - pc - ph + both, ph - both], [pc - both, both]], dtype=np.float64
        )
        return np.clip(cells, 0.0, 1.0)
    if mode == "enumeration":
        n = dist.n
        if n > MAX_CONTEXT_ENUMERATION_BITS:
            raise ExactComputationError(
                f"context enumeration requires n <= {MAX_CONTEXT_ENUMERATION_BITS}, got {n}"
            )
        size = 1 << n
        idx = np.arange(size, dtype=np.int64)
        X = np.empty((size, n), dtype=np.uint8)
        for j in range(n):
            X[:, j] = (idx >> (n - 1 - j)) & 1
        w = np.where(X == 1, dist.biases, 1.0 - dist.biases).prod(axis=1)
        cv = c.evaluate(X).astype(bool)
        hv = h.evaluate(X).astype(bool)
        cells = np.empty((2, 2))
        for i in (0, 1):
            for j in (0, 1):
                mask = (cv == bool(i)) & (hv == bool(j))
                cells[i, j] = w[mask].sum()
        return cells
    raise ValueError(f"unknown joint mode {mode!r}")


def classification_error(c: Concept, h: Concept, dist: ContextDistribution) -> float:
    """Pr_D[c(x) != h(x)], exact."""
    cells = joint_cells(c, h, dist)
    return float(cells[0, 1] + cells[1, 0])


# -- error functional and log-loss ---------------------------------------------


def model_error(
    target: TargetModel,
    hyp: HypothesisModel,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
    draws: int = 100_000,
):
    """Expected conditional KL divergence of hyp against target, in bits.

    exact mode returns a float computed from the exact joint cells and the
    four closed-form KLs; montecarlo mode returns (estimate, standard_error)
    with the expectation taken over sampled contexts only.
    """
    check_compatible(target.p0, hyp.q0)
    check_compatible(target.p1, hyp.q1)
    kls = np.array(
        [
            [kl_divergence(target.p0, hyp.q0), kl_divergence(target.p0, hyp.q1)],
            [kl_divergence(target.p1, hyp.q0), kl_divergence(target.p1, hyp.q1)],
        ]
    )
    if mode == "exact":
        cells = joint_cells(target.concept, hyp.hypothesis, target.context_dist)
        return float((cells * kls).sum())
    if mode == "montecarlo":
        if rng is None:
            raise ValueError("montecarlo mode needs a generator")
        X = target.context_dist.sample(rng, draws)
        cv = target.concept.evaluate(X).astype(np.int64)
        hv = hyp.hypothesis.evaluate(X).astype(np.int64)
        vals = kls[cv, hv]
        est = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(draws)) if draws > 1 else float("inf")
        return est, se
    raise ValueError(f"unknown model_error mode {mode!r}")


def mean_conditional_entropy(target: TargetModel) -> float:
    """E_x[H(P_{c(x)})] in bits: the model-independent part of the log-loss."""
    w1 = concept_probability(target.concept, target.context_dist)
    return (1.0 - w1) * entropy(target.p0) + w1 * entropy(target.p1)


def _sample_as_arrays(sample_pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sample_pairs, tuple) and len(sample_pairs) == 2:
        return sample_pairs
    X = np.stack([p.context for p in sample_pairs])
    Y = np.stack([p.outcome for p in sample_pairs])
    return X, Y


def empirical_log_loss(
    hyp: HypothesisModel, sample_pairs, budget: BoundednessBudget
) -> float:
    """Total log-loss of a sample in bits, using the clamped evaluator.

    Accepts a list of LabeledPair or an (X, Y) array tuple. The sum is
    sum over pairs of -log2 Q_{h(x)}(y), each term clamped at m_cap.
    """
    X, Y = _sample_as_arrays(sample_pairs)
    if X.shape[0] < 1:
        raise ValueError("empirical_log_loss needs a nonempty sample")
    hv = hyp.hypothesis.evaluate(X).astype(bool)
    total = 0.0
    if (~hv).any():
        total -= float(np.sum(log_density(hyp.q0, Y[~hv], budget)))
    if hv.any():
        total -= float(np.sum(log_density(hyp.q1, Y[hv], budget)))
    return total
