"""Distribution families over the outcome space.

Three families ship: Bernoulli products over {0,1}^k, b-ary products over
{0,..,b-1}^k, and spherical Gaussians with a known shared coordinate sigma.
Every family carries a sampler, a bounded log2-density evaluator, an exact
closed-form KL divergence, and a single-distribution fitter.

Boundedness of the log-loss is enforced differently per family: discrete
parameters are floored at a smoothing level ``lam`` so that
``-log2 P(y) <= k * log2(1/lam)`` holds for every outcome, while Gaussian
densities are clamped at evaluation time to ``-m_cap`` bits (clamping only
affects log-loss computations; KL always uses exact parameters).

All logarithms in this package are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatchError,
    ExactComputationError,
    FamilyMismatchError,
    InsufficientSampleError,
)

LOG2E = math.log2(math.e)

BERNOULLI_PRODUCT = "bernoulli-product"
BARY_PRODUCT = "bary-product"
SPHERICAL_GAUSSIAN = "spherical-gaussian"

FAMILIES = (BERNOULLI_PRODUCT, BARY_PRODUCT, SPHERICAL_GAUSSIAN)
DISCRETE_FAMILIES = (BERNOULLI_PRODUCT, BARY_PRODUCT)

DEFAULT_LAM = 1e-3
DEFAULT_GAUSSIAN_M_CAP = 64.0

_ATOL = 1e-12


@dataclass(frozen=True)
class BoundednessBudget:
    """Uniform bound on -log2 P(y) plus the discrete smoothing floor.

    For discrete families ``m_cap`` equals ``k * log2(1/lam)`` exactly; for
    Gaussians it is the evaluator clamp level.
    """

    m_cap: float
    lam: float

    def __post_init__(self):
        if not (0.0 < self.lam < 0.5):
            raise ValueError(f"lam must lie in (0, 1/2), got {self.lam}")
        if not self.m_cap > 0.0:
            raise ValueError(f"m_cap must be positive, got {self.m_cap}")


def discrete_m_cap(k: int, lam: float) -> float:
    return k * math.log2(1.0 / lam)


@dataclass(frozen=True)
class FamilyShape:
    """Structure of a family instance: everything but the free parameters.

    ``b`` and ``lam`` apply to discrete families; ``sigma``, the mean box and
    ``m_cap`` to Gaussians. Specs are family-compatible iff their shapes match.
    """

    family: str
    k: int
    b: int | None = None
    sigma: float | None = None
    lam: float | None = None
    mean_low: float = 0.0
    mean_high: float = 1.0
    m_cap: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.family in DISCRETE_FAMILIES:
            b = 2 if self.family == BERNOULLI_PRODUCT else self.b
            if b is None or b < 2:
                raise ValueError("b-ary families need b >= 2")
            lam = self.lam if self.lam is not None else DEFAULT_LAM
            if not (0.0 < lam < 0.5) or b * lam >= 1.0:
                raise ValueError(f"lam={lam} infeasible for b={b} symbols")
            object.__setattr__(self, "b", b)
            object.__setattr__(self, "lam", lam)
        else:
            if self.sigma is None or self.sigma <= 0.0:
                raise ValueError("spherical Gaussians need sigma > 0")
            if not self.mean_low < self.mean_high:
                raise ValueError("mean box must satisfy low < high")

    def budget(self) -> BoundednessBudget:
        if self.family in DISCRETE_FAMILIES:
            return BoundednessBudget(discrete_m_cap(self.k, self.lam), self.lam)
        m_cap = self.m_cap if self.m_cap is not None else DEFAULT_GAUSSIAN_M_CAP
        return BoundednessBudget(m_cap, self.lam if self.lam is not None else DEFAULT_LAM)

    @property
    def is_discrete(self) -> bool:
        return self.family in DISCRETE_FAMILIES

    @property
    def domain_size(self) -> int | None:
        """Number of outcomes for discrete shapes, None for Gaussians."""
        if not self.is_discrete:
            return None
        return self.b**self.k


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A member of a distribution family.

    Use the factories :func:`bernoulli_product`, :func:`bary_product` and
    :func:`spherical_gaussian` rather than the raw constructor.
    """

    family: str
    biases: np.ndarray | None = None
    table: np.ndarray | None = None
    mean: np.ndarray | None = None
    sigma: float | None = None
    lam: float | None = None
    mean_low: float = 0.0
    mean_high: float = 1.0
    m_cap: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family == BERNOULLI_PRODUCT:
            biases = np.ascontiguousarray(self.biases, dtype=np.float64)
            if biases.ndim != 1 or biases.size < 1:
                raise ValueError("biases must be a nonempty vector")
            lam = self.lam if self.lam is not None else DEFAULT_LAM
            if np.any(biases < lam - _ATOL) or np.any(biases > 1.0 - lam + _ATOL):
                raise ValueError(f"biases must lie in [{lam}, {1 - lam}]")
            biases.setflags(write=False)
            object.__setattr__(self, "biases", biases)
            object.__setattr__(self, "lam", lam)
        elif self.family == BARY_PRODUCT:
            table = np.ascontiguousarray(self.table, dtype=np.float64)
            if table.ndim != 2 or table.shape[1] < 2:
                raise ValueError("table must be (k, b) with b >= 2")
            lam = self.lam if self.lam is not None else DEFAULT_LAM
            if np.any(table < lam - _ATOL):
                raise ValueError(f"table entries must be >= {lam}")
            sums = table.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-12):
                raise ValueError("table rows must sum to 1 within 1e-12")
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
            object.__setattr__(self, "lam", lam)
        elif self.family == SPHERICAL_GAUSSIAN:
            mean = np.ascontiguousarray(self.mean, dtype=np.float64)
            if mean.ndim != 1 or mean.size < 1:
                raise ValueError("mean must be a nonempty vector")
            if self.sigma is None or self.sigma <= 0.0:
                raise ValueError("sigma must be positive")
            if np.any(mean < self.mean_low - _ATOL) or np.any(mean > self.mean_high + _ATOL):
                raise ValueError(
                    f"mean must lie in [{self.mean_low}, {self.mean_high}]^k"
                )
            if not np.all(np.isfinite(mean)):
                raise ValueError("mean entries must be finite")
            mean.setflags(write=False)
            object.__setattr__(self, "mean", mean)
        else:
            raise ValueError(f"unknown family {self.family!r}")

    # -- structure ---------------------------------------------------------

    @property
    def k(self) -> int:
        if self.family == BERNOULLI_PRODUCT:
            return self.biases.shape[0]
        if self.family == BARY_PRODUCT:
            return self.table.shape[0]
        return self.mean.shape[0]

    @property
    def b(self) -> int | None:
        if self.family == BERNOULLI_PRODUCT:
            return 2
        if self.family == BARY_PRODUCT:
            return self.table.shape[1]
        return None

    def structure(self) -> FamilyShape:
        return FamilyShape(
            family=self.family,
            k=self.k,
            b=self.b if self.family == BARY_PRODUCT else None,
            sigma=self.sigma,
            lam=self.lam,
            mean_low=self.mean_low,
            mean_high=self.mean_high,
            m_cap=self.m_cap,
        )

    def __eq__(self, other):
        if not isinstance(other, DistributionSpec):
            return NotImplemented
        if self.family != other.family:
            return False
        if self.family == BERNOULLI_PRODUCT:
            return self.lam == other.lam and np.array_equal(self.biases, other.biases)
        if self.family == BARY_PRODUCT:
            return self.lam == other.lam and np.array_equal(self.table, other.table)
        return (
            self.sigma == other.sigma
            and self.mean_low == other.mean_low
            and self.mean_high == other.mean_high
            and np.array_equal(self.mean, other.mean)
        )

    __hash__ = object.__hash__


def bernoulli_product(biases, lam: float = DEFAULT_LAM) -> DistributionSpec:
    return DistributionSpec(BERNOULLI_PRODUCT, biases=np.asarray(biases, dtype=np.float64), lam=lam)


def bary_product(table, lam: float = DEFAULT_LAM) -> DistributionSpec:
    return DistributionSpec(BARY_PRODUCT, table=np.asarray(table, dtype=np.float64), lam=lam)


def spherical_gaussian(
    mean,
    sigma: float,
    mean_box: tuple[float, float] = (0.0, 1.0),
    m_cap: float | None = None,
) -> DistributionSpec:
    return DistributionSpec(
        SPHERICAL_GAUSSIAN,
        mean=np.asarray(mean, dtype=np.float64),
        sigma=float(sigma),
        mean_low=float(mean_box[0]),
        mean_high=float(mean_box[1]),
        m_cap=m_cap,
    )


def check_compatible(p: DistributionSpec, q: DistributionSpec) -> None:
    """Raise FamilyMismatchError unless p and q share family and structure."""
    if p.family != q.family or p.k != q.k or p.b != q.b:
        raise FamilyMismatchError(
            f"incompatible specs: {p.family}(k={p.k}, b={p.b}) vs "
            f"{q.family}(k={q.k}, b={q.b})"
        )
    if p.family == SPHERICAL_GAUSSIAN and p.sigma != q.sigma:
        raise FamilyMismatchError(
            f"Gaussian sigmas differ: {p.sigma} vs {q.sigma}; shared covariance required"
        )


# -- sampling ---------------------------------------------------------------


def sample(dist: DistributionSpec, rng: np.random.Generator, count: int | None = None):
    """Draw i.i.d. outcomes.

    Returns a single (k,) vector when ``count`` is None, else a (count, k)
    array. Discrete outcomes are int8, Gaussian outcomes float64.
    """
    m = 1 if count is None else int(count)
    if m < 1:
        raise ValueError("count must be >= 1")
    if dist.family == BERNOULLI_PRODUCT:
        u = rng.random((m, dist.k), dtype=np.float32)
        out = (u < dist.biases).astype(np.int8)
    elif dist.family == BARY_PRODUCT:
        cum = np.cumsum(dist.table, axis=1)
        out = np.empty((m, dist.k), dtype=np.int8)
        u = rng.random((m, dist.k), dtype=np.float32)
        for j in range(dist.k):
            out[:, j] = np.searchsorted(cum[j], u[:, j].astype(np.float64), side="right")
        np.clip(out, 0, dist.b - 1, out=out)
    else:
        out = dist.mean + dist.sigma * rng.standard_normal((m, dist.k))
    return out[0] if count is None else out


# -- evaluation --------------------------------------------------------------


def _as_batch(dist: DistributionSpec, y) -> tuple[np.ndarray, bool]:
    arr = np.asarray(y)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dist.k:
        raise DimensionMismatchError(
            f"outcome has length {arr.shape[-1]}, expected {dist.k}"
        )
    return arr, single


def log_density(dist: DistributionSpec, y, budget: BoundednessBudget | None = None):
    """log2 density (or mass) of y under dist, clamped below at -m_cap.

    Discrete families never hit the clamp: lam-smoothing already enforces
    -log2 P(y) <= k*log2(1/lam). Pass ``budget=None`` for the raw value.
    """
    arr, single = _as_batch(dist, y)
    if dist.family == BERNOULLI_PRODUCT:
        vals = kernels.bernoulli_log_density(
            np.ascontiguousarray(arr, dtype=np.int8),
            np.log2(dist.biases),
            np.log2(1.0 - dist.biases),
        )
    elif dist.family == BARY_PRODUCT:
        vals = kernels.bary_log_density(
            np.ascontiguousarray(arr, dtype=np.int8), np.log2(dist.table)
        )
    else:
        vals = kernels.gaussian_log_density(
            np.ascontiguousarray(arr, dtype=np.float64), dist.mean, dist.sigma
        )
    if budget is not None:
        vals = np.maximum(vals, -budget.m_cap)
    return float(vals[0]) if single else vals


def kl_divergence(p: DistributionSpec, q: DistributionSpec) -> float:
    """Exact KL(p || q) in bits, coordinate-wise closed form."""
    check_compatible(p, q)
    if p.family == BERNOULLI_PRODUCT:
        a, b = p.biases, q.biases
        terms = a * np.log2(a / b) + (1.0 - a) * np.log2((1.0 - a) / (1.0 - b))
        return float(terms.sum())
    if p.family == BARY_PRODUCT:
        terms = p.table * np.log2(p.table / q.table)
        return float(terms.sum())
    diff = p.mean - q.mean
    return float(np.dot(diff, diff) * LOG2E / (2.0 * p.sigma * p.sigma))


def entropy(dist: DistributionSpec) -> float:
    """Entropy in bits (differential entropy for Gaussians)."""
    if dist.family == BERNOULLI_PRODUCT:
        a = dist.biases
        return float(-(a * np.log2(a) + (1.0 - a) * np.log2(1.0 - a)).sum())
    if dist.family == BARY_PRODUCT:
        return float(-(dist.table * np.log2(dist.table)).sum())
    k = dist.k
    return 0.5 * k * math.log2(2.0 * math.pi * math.e * dist.sigma * dist.sigma)


# -- fitting -----------------------------------------------------------------


def floor_simplex(weights: np.ndarray, lam: float) -> np.ndarray:
    """Project empirical weights onto the simplex with per-entry floor lam.

    This is the constrained maximum-likelihood solution (water-filling):
    entries below the floor are pinned at lam and the rest renormalized.
    """
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0.0:
        return np.full(w.shape, 1.0 / w.size)
    p = w / total
    fixed = np.zeros(w.shape, dtype=bool)
    for _ in range(w.size):
        new_fixed = fixed | (p < lam - 1e-15)
        if new_fixed.all():
            return np.full(w.shape, 1.0 / w.size)
        free_mass = 1.0 - lam * new_fixed.sum()
        scale = free_mass / p[~new_fixed].sum()
        p = np.where(new_fixed, lam, p * scale)
        if bool((new_fixed == fixed).all()):
            break
        fixed = new_fixed
    return p


def fit_single(shape: FamilyShape, sample_ys: np.ndarray) -> DistributionSpec:
    """Fit one distribution of the given shape to an i.i.d. sample.

    Discrete families use empirical frequencies clamped at the smoothing
    floor; Gaussians use the empirical mean clipped into the mean box with
    the known sigma.
    """
    ys = np.asarray(sample_ys)
    if ys.ndim != 2 or ys.shape[0] < 1:
        raise InsufficientSampleError("fit_single needs a nonempty (m, k) sample")
    if ys.shape[1] != shape.k:
        raise DimensionMismatchError(f"sample has k={ys.shape[1]}, expected {shape.k}")
    if shape.family == BERNOULLI_PRODUCT:
        freq = ys.mean(axis=0)
        biases = np.clip(freq, shape.lam, 1.0 - shape.lam)
        return bernoulli_product(biases, lam=shape.lam)
    if shape.family == BARY_PRODUCT:
        table = np.empty((shape.k, shape.b))
        for j in range(shape.k):
            counts = np.bincount(ys[:, j].astype(np.int64), minlength=shape.b)
            table[j] = floor_simplex(counts.astype(np.float64), shape.lam)
        return bary_product(table, lam=shape.lam)
    mean = np.clip(ys.mean(axis=0), shape.mean_low, shape.mean_high)
    return spherical_gaussian(
        mean, shape.sigma, mean_box=(shape.mean_low, shape.mean_high), m_cap=shape.m_cap
    )


def default_spec(shape: FamilyShape) -> DistributionSpec:
    """Fixed fallback member of a family: uniform, or the mean-box midpoint."""
    if shape.family == BERNOULLI_PRODUCT:
        return bernoulli_product(np.full(shape.k, 0.5), lam=shape.lam)
    if shape.family == BARY_PRODUCT:
        return bary_product(np.full((shape.k, shape.b), 1.0 / shape.b), lam=shape.lam)
    mid = 0.5 * (shape.mean_low + shape.mean_high)
    return spherical_gaussian(
        np.full(shape.k, mid),
        shape.sigma,
        mean_box=(shape.mean_low, shape.mean_high),
        m_cap=shape.m_cap,
    )


# -- small-domain exact machinery --------------------------------------------

MAX_ENUMERATION = 2**20


def enumerate_outcomes(shape: FamilyShape) -> np.ndarray:
    """All outcomes of a discrete shape as a (b^k, k) int8 matrix."""
    if not shape.is_discrete:
        raise ExactComputationError("cannot enumerate a continuous outcome space")
    size = shape.domain_size
    if size > MAX_ENUMERATION:
        raise ExactComputationError(
            f"domain has {size} points, enumeration capped at {MAX_ENUMERATION}"
        )
    idx = np.arange(size, dtype=np.int64)
    out = np.empty((size, shape.k), dtype=np.int8)
    for j in range(shape.k):
        out[:, j] = (idx // shape.b ** (shape.k - 1 - j)) % shape.b
    return out


def pmf_vector(dist: DistributionSpec, outcomes: np.ndarray) -> np.ndarray:
    """Probability mass of each row of an outcome matrix."""
    return np.exp2(log_density(dist, outcomes))


def total_variation_exact(p: DistributionSpec, q: DistributionSpec) -> float:
    """Total variation distance on a small discrete domain, by enumeration."""
    check_compatible(p, q)
    outcomes = enumerate_outcomes(p.structure())
    return float(0.5 * np.abs(pmf_vector(p, outcomes) - pmf_vector(q, outcomes)).sum())
