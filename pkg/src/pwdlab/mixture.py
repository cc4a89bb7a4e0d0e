"""Two-component mixture learning by EM with restarts.

The reverse pipeline assumes a parametrically correct mixture learner: on a
healthy mixture (both weights and the component divergence bounded away from
zero) it must recover each component, not just the mixture density. EM with
random restarts is the concrete stand-in at desk scale. M-steps project onto
the family's constraint set (smoothing floors, mean boxes) with the exact
constrained maximizer, so the average log-likelihood is non-decreasing; this
is asserted on every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    BARY_PRODUCT,
    BERNOULLI_PRODUCT,
    DistributionSpec,
    FamilyShape,
    bary_product,
    bernoulli_product,
    fit_single,
    floor_simplex,
    kl_divergence,
    log_density,
    spherical_gaussian,
)
from .errors import EMDivergenceError, InsufficientSampleError

MONOTONICITY_SLACK = 1e-9


@dataclass(frozen=True)
class MixtureFit:
    """Fitted two-component mixture; weights sum to one."""

    weight0: float
    weight1: float
    comp0: DistributionSpec
    comp1: DistributionSpec
    loglik: float
    restarts_used: int
    converged: bool
    iterations: int
    trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if abs(self.weight0 + self.weight1 - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")


@dataclass(frozen=True)
class HealthReport:
    """Healthy iff min weight >= eta AND max directed component KL >= eta."""

    eta: float
    min_weight: float
    max_kl: float
    healthy: bool


def health_check(fit: MixtureFit, eta: float) -> HealthReport:
    """Evaluate the healthy-mixture conditions on fitted parameters."""
    min_w = min(fit.weight0, fit.weight1)
    max_kl = max(
        kl_divergence(fit.comp0, fit.comp1), kl_divergence(fit.comp1, fit.comp0)
    )
    return HealthReport(
        eta=eta, min_weight=min_w, max_kl=max_kl,
        healthy=(min_w >= eta and max_kl >= eta),
    )


def _init_component(shape: FamilyShape, y_row: np.ndarray) -> DistributionSpec:
    """Seed a component from one sample point, smoothed toward uniform."""
    if shape.family == BERNOULLI_PRODUCT:
        biases = np.clip(0.25 + 0.5 * y_row.astype(np.float64), shape.lam, 1.0 - shape.lam)
        return bernoulli_product(biases, lam=shape.lam)
    if shape.family == BARY_PRODUCT:
        table = np.full((shape.k, shape.b), 0.5 / shape.b)
        table[np.arange(shape.k), y_row.astype(np.int64)] += 0.5
        table = np.vstack([floor_simplex(row, shape.lam) for row in table])
        return bary_product(table, lam=shape.lam)
    mean = np.clip(y_row.astype(np.float64), shape.mean_low, shape.mean_high)
    return spherical_gaussian(
        mean, shape.sigma, mean_box=(shape.mean_low, shape.mean_high), m_cap=shape.m_cap
    )


def _m_step(shape: FamilyShape, ys: np.ndarray, resp: np.ndarray, old: DistributionSpec) -> DistributionSpec:
    total = resp.sum()
    if total <= 0.0:
        return old
    if shape.family == BERNOULLI_PRODUCT:
        freq = (resp @ ys) / total
        return bernoulli_product(np.clip(freq, shape.lam, 1.0 - shape.lam), lam=shape.lam)
    if shape.family == BARY_PRODUCT:
        table = np.empty((shape.k, shape.b))
        yl = ys.astype(np.int64)
        for j in range(shape.k):
            counts = np.zeros(shape.b)
            np.add.at(counts, yl[:, j], resp)
            table[j] = floor_simplex(counts, shape.lam)
        return bary_product(table, lam=shape.lam)
    mean = np.clip((resp @ ys) / total, shape.mean_low, shape.mean_high)
    return spherical_gaussian(
        mean, shape.sigma, mean_box=(shape.mean_low, shape.mean_high), m_cap=shape.m_cap
    )


def _em_once(
    ys: np.ndarray,
    shape: FamilyShape,
    comp0: DistributionSpec,
    comp1: DistributionSpec,
    max_iter: int,
    tol: float,
) -> tuple[float, float, DistributionSpec, DistributionSpec, bool, int, list[float]]:
    m = ys.shape[0]
    w1 = 0.5
    prev = -np.inf
    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore", over="ignore"):
            a0 = np.log2(1.0 - w1) + log_density(comp0, ys)
            a1 = np.log2(w1) + log_density(comp1, ys)
            mx = np.maximum(a0, a1)
            ll_rows = mx + np.log2(np.exp2(a0 - mx) + np.exp2(a1 - mx))
            avg_ll = float(ll_rows.mean())
            d = a0 - a1
            with np.errstate(invalid="ignore"):
                resp1 = 1.0 / (1.0 + np.exp2(np.clip(d, -1000.0, 1000.0)))
        if avg_ll < prev - MONOTONICITY_SLACK:
            raise EMDivergenceError(
                f"log-likelihood decreased: {prev:.12f} -> {avg_ll:.12f} at iteration {it}"
            )
        trace.append(avg_ll)
        if np.isfinite(prev) and abs(avg_ll - prev) < tol:
            converged = True
            break
        prev = avg_ll
        w1 = float(resp1.mean())
        comp0 = _m_step(shape, ys, 1.0 - resp1, comp0)
        comp1 = _m_step(shape, ys, resp1, comp1)
    return w1, trace[-1], comp0, comp1, converged, it, trace


def em_fit_2mixture(
    ys: np.ndarray,
    shape: FamilyShape,
    restarts: int,
    rng: np.random.Generator,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> MixtureFit:
    """Best-of-restarts EM fit of a two-component mixture.

    Restarts seed components from two random sample points; the fit with the
    highest final average log-likelihood wins (ties keep the earliest
    restart). A degenerate sample of identical points yields a duplicated
    single-component fit flagged unconverged.
    """
    ys = np.asarray(ys)
    if ys.ndim != 2 or ys.shape[0] < 20:
        raise InsufficientSampleError("mixture fitting needs at least 20 observations")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if bool((ys == ys[0]).all()):
        single = fit_single(shape, ys)
        ll = float(np.mean(log_density(single, ys)))
        return MixtureFit(
            weight0=0.5, weight1=0.5, comp0=single, comp1=single,
            loglik=ll, restarts_used=restarts, converged=False, iterations=0,
        )
    best = None
    for s in range(restarts):
        i0, i1 = rng.choice(ys.shape[0], size=2, replace=False)
        comp0 = _init_component(shape, ys[i0])
        comp1 = _init_component(shape, ys[i1])
        w1, ll, c0, c1, conv, iters, trace = _em_once(
            ys, shape, comp0, comp1, max_iter, tol
        )
        if best is None or ll > best.loglik:
            best = MixtureFit(
                weight0=1.0 - w1, weight1=w1, comp0=c0, comp1=c1,
                loglik=ll, restarts_used=s + 1, converged=conv,
                iterations=iters, trace=tuple(trace),
            )
    return MixtureFit(
        weight0=best.weight0, weight1=best.weight1, comp0=best.comp0,
        comp1=best.comp1, loglik=best.loglik, restarts_used=restarts,
        converged=best.converged, iterations=best.iterations, trace=best.trace,
    )
