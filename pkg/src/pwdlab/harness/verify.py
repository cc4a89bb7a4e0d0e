"""Property suites for every identity and bound the pipelines rely on.

Each suite draws seeded random instances, evaluates the claimed identity or
inequality with exact (enumerated or closed-form) probabilities wherever the
claim is exact, and with Monte Carlo margins where it is statistical. Suites
return machine-readable results with their measured margins; the acceptance
tests and the CLI `verify` subcommand both run them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..cccn import (
    estimated_noise_rate,
    lab_label_batch,
    lab_parameters,
    noise_rates,
)
from ..distlearn import RobustnessBudget, robust_learn_list, two_point_test
from ..distributions import (
    FamilyShape,
    bary_product,
    bernoulli_product,
    enumerate_outcomes,
    floor_simplex,
    kl_divergence,
    log_density,
    pmf_vector,
    sample,
    spherical_gaussian,
)
from ..events import (
    enumerate_event_class,
    event_from_approximations,
    event_probability,
    likelihood_ratio_event,
)
from ..model import (
    Concept,
    ContextDistribution,
    HypothesisModel,
    TargetModel,
    gen_sample_arrays,
    mean_conditional_entropy,
    model_error,
)
from ..reductions import CandidateModel, CandidateModelList, ml_select, ml_selection_sample_size
from ..rng import derive_rng

DEFAULT_SEED = 20260810

_SUITE_IDS = {
    "lab-identity": 0,
    "noise-bounds": 1,
    "admit": 2,
    "approxdist": 3,
    "event-classes": 4,
    "logsum": 5,
    "lecam": 6,
    "robustness": 7,
    "ml-select": 8,
    "decomposition": 9,
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "runtime_s": round(self.runtime_s, 3),
            "metrics": self.metrics,
        }


def _rng(seed: int, name: str, sub: int = 0) -> np.random.Generator:
    return derive_rng(seed, 100 + _SUITE_IDS[name], sub)


def _random_valid_guesses(rng, size):
    """(p_hat, q_hat, xi) triples with |q_hat - p_hat| >= xi, all in [0, 1]."""
    xi = rng.uniform(1e-3, 1.0, size)
    gap = xi + (1.0 - xi) * rng.random(size)
    lo = rng.random(size) * (1.0 - gap)
    swap = rng.random(size) < 0.5
    p_hat = np.where(swap, lo + gap, lo)
    q_hat = np.where(swap, lo, lo + gap)
    return p_hat, q_hat, xi


def check_lab_identity(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Estimated-noise identity q a0 + (1-q) b0 = p a1 + (1-p) b1 = 1/2 - xi/4."""
    t0 = time.perf_counter()
    rng = _rng(seed, "lab-identity")
    n = 100_000
    p_hat, q_hat, xi = _random_valid_guesses(rng, n)
    max_residual = 0.0
    range_violations = 0
    for i in range(n):
        params = lab_parameters(float(p_hat[i]), float(q_hat[i]), float(xi[i]))
        target = estimated_noise_rate(params)
        r1 = abs(params.q_hat * params.a0 + (1.0 - params.q_hat) * params.b0 - target)
        r2 = abs(params.p_hat * params.a1 + (1.0 - params.p_hat) * params.b1 - target)
        max_residual = max(max_residual, r1, r2)
        if not (0.0 <= params.a0 <= 1.0 and 0.0 <= params.b0 <= 1.0):
            range_violations += 1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="lab-identity",
        passed=(max_residual < 1e-12 and range_violations == 0 and elapsed < 5.0),
        metrics={
            "triples": n,
            "max_residual": max_residual,
            "range_violations": range_violations,
        },
        runtime_s=elapsed,
    )


def check_noise_bounds(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Noise rates stay below 1/2 - xi/4 + Delta under Delta-accurate guesses,
    and empirical rates match the formulas."""
    t0 = time.perf_counter()
    rng = _rng(seed, "noise-bounds")
    n = 10_000
    p_hat, q_hat, xi = _random_valid_guesses(rng, n)
    sweep_violations = 0
    worst_margin = -np.inf
    for i in range(n):
        params = lab_parameters(float(p_hat[i]), float(q_hat[i]), float(xi[i]))
        delta = rng.uniform(0.0, 0.2)
        p = float(np.clip(params.p_hat + rng.uniform(-delta, delta), 0.0, 1.0))
        q = float(np.clip(params.q_hat + rng.uniform(-delta, delta), 0.0, 1.0))
        eta0, eta1 = noise_rates(p, q, params)
        bound = estimated_noise_rate(params) + delta
        excess = max(eta0, eta1) - bound
        worst_margin = max(worst_margin, excess)
        if excess > 1e-12:
            sweep_violations += 1
    # Monte Carlo: one concrete event, both conditional classes.
    params = lab_parameters(0.25, 0.75, 0.5)
    p_true, q_true = 0.2, 0.8
    m = 100_000
    eta0_f, eta1_f = noise_rates(p_true, q_true, params)
    mem0 = rng.random(m) < p_true
    labels0 = lab_label_batch(mem0, params, rng)
    eta0_emp = float(np.mean(labels0 == 1))
    mem1 = rng.random(m) < q_true
    labels1 = lab_label_batch(mem1, params, rng)
    eta1_emp = float(np.mean(labels1 == 0))
    se0 = math.sqrt(eta0_f * (1 - eta0_f) / m)
    se1 = math.sqrt(eta1_f * (1 - eta1_f) / m)
    mc_ok = abs(eta0_emp - eta0_f) <= 3 * se0 and abs(eta1_emp - eta1_f) <= 3 * se1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="noise-bounds",
        passed=(sweep_violations == 0 and mc_ok),
        metrics={
            "sweep_size": n,
            "sweep_violations": sweep_violations,
            "worst_excess": worst_margin,
            "eta0_formula": eta0_f,
            "eta0_empirical": eta0_emp,
            "eta1_formula": eta1_f,
            "eta1_empirical": eta1_emp,
        },
        runtime_s=elapsed,
    )


_DISCRETE_SHAPES = (
    FamilyShape("bernoulli-product", k=2, lam=0.01),
    FamilyShape("bernoulli-product", k=3, lam=0.02),
    FamilyShape("bernoulli-product", k=4, lam=0.05),
    FamilyShape("bary-product", k=2, b=3, lam=0.05),
    FamilyShape("bary-product", k=3, b=3, lam=0.05),
    FamilyShape("bernoulli-product", k=12, lam=0.01),
)


def _random_discrete_spec(shape: FamilyShape, rng):
    if shape.family == "bernoulli-product":
        return bernoulli_product(
            rng.uniform(shape.lam, 1.0 - shape.lam, shape.k), lam=shape.lam
        )
    rows = [floor_simplex(rng.dirichlet(np.ones(shape.b)), shape.lam) for _ in range(shape.k)]
    return bary_product(np.vstack(rows), lam=shape.lam)


def check_admit(seed: int = DEFAULT_SEED) -> SuiteResult:
    """The likelihood-ratio event at threshold gamma/2 separates by gamma^2/(8M)."""
    t0 = time.perf_counter()
    rng = _rng(seed, "admit")
    n = 1000
    outcome_cache = {s: enumerate_outcomes(s) for s in _DISCRETE_SHAPES}
    violations = 0
    min_margin = np.inf
    for i in range(n):
        shape = _DISCRETE_SHAPES[i % len(_DISCRETE_SHAPES)]
        outcomes = outcome_cache[shape]
        p = _random_discrete_spec(shape, rng)
        q = _random_discrete_spec(shape, rng)
        kl = kl_divergence(p, q)
        if kl <= 0.0:
            continue
        gamma = min(1.0, kl)
        event = likelihood_ratio_event(p, q, gamma / 2.0)
        mem = event.contains(outcomes)
        p_e = float(pmf_vector(p, outcomes)[mem].sum())
        q_e = float(pmf_vector(q, outcomes)[mem].sum())
        m_cap = shape.budget().m_cap
        bound = gamma * gamma / (8.0 * m_cap)
        inter = gamma / (2.0 * m_cap)
        margin = min(p_e - q_e - bound, p_e - inter)
        min_margin = min(min_margin, margin)
        if p_e - q_e < bound - 1e-12 or p_e < inter - 1e-12:
            violations += 1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="admit",
        passed=(violations == 0 and elapsed < 30.0),
        metrics={"pairs": n, "violations": violations, "min_margin": min_margin},
        runtime_s=elapsed,
    )


def check_approxdist(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Event construction from approximate references keeps a positive
    separation whenever the premise gamma > 8M(sqrt(2a) + (8M^2 a)^(1/8)) holds."""
    t0 = time.perf_counter()
    rng = _rng(seed, "approxdist")
    shape = FamilyShape("bernoulli-product", k=1, lam=0.25)
    m_cap = shape.budget().m_cap  # 2 bits
    # alpha must clear the construction's positivity ceiling (about 1.6e-13 at
    # this gamma and M) while staying far above the ~1e-16 float noise floor of
    # the closed-form KL evaluation.
    alpha = 1e-14
    outcomes = enumerate_outcomes(shape)
    n = 200
    violations = 0
    min_sep = np.inf
    for _ in range(n):
        p_bias = rng.uniform(0.74, 0.75)
        q_bias = rng.uniform(0.25, 0.26)
        p = bernoulli_product([p_bias], lam=shape.lam)
        q = bernoulli_product([q_bias], lam=shape.lam)
        kl = kl_divergence(p, q)
        gamma = 0.999 * min(1.0, kl)
        premise = gamma > 8.0 * m_cap * (
            math.sqrt(2.0 * alpha) + (8.0 * m_cap * m_cap * alpha) ** 0.125
        )
        if not premise:
            raise AssertionError("constructed instance must satisfy the premise")
        shift = 3e-8
        p_hat = bernoulli_product([p_bias - shift], lam=shape.lam)
        q_hat = bernoulli_product([q_bias + shift], lam=shape.lam)
        if kl_divergence(p, p_hat) > alpha or kl_divergence(q, q_hat) > alpha:
            raise AssertionError("approximations exceed alpha")
        event = event_from_approximations(p_hat, q_hat, gamma, alpha, m_cap)
        if event is None:
            violations += 1
            continue
        b = gamma * gamma / (8.0 * m_cap) - math.sqrt(2.0 * alpha)
        required = b**4 / (2.0 * m_cap) - math.sqrt(2.0 * alpha)
        mem = event.contains(outcomes)
        sep = abs(
            float(pmf_vector(p, outcomes)[mem].sum())
            - float(pmf_vector(q, outcomes)[mem].sum())
        )
        min_sep = min(min_sep, sep)
        if required <= 0.0 or sep < required - 1e-15:
            violations += 1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="approxdist",
        passed=(violations == 0),
        metrics={"instances": n, "violations": violations, "min_separation": min_sep},
        runtime_s=elapsed,
    )


def check_event_classes(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Appendix constructions: enumerated classes always contain an event with
    the guaranteed separation, probabilities exact."""
    t0 = time.perf_counter()
    rng = _rng(seed, "event-classes")
    # Product families.
    prod_shapes = [s for s in _DISCRETE_SHAPES if s.k <= 4]
    prod_violations = 0
    prod_min_margin = np.inf
    for i in range(1000):
        shape = prod_shapes[i % len(prod_shapes)]
        p = _random_discrete_spec(shape, rng)
        q = _random_discrete_spec(shape, rng)
        kl = kl_divergence(p, q)
        if kl <= 0.0:
            continue
        gamma = min(1.0, kl)
        eclass = enumerate_event_class(shape, gamma)
        best = max(
            abs(event_probability(p, ev) - event_probability(q, ev))
            for ev in eclass.events
        )
        prod_min_margin = min(prod_min_margin, best - eclass.xi_bound)
        if best < eclass.xi_bound - 1e-12:
            prod_violations += 1
    # Spherical Gaussians.
    gauss_violations = 0
    gauss_min_margin = np.inf
    for i in range(1000):
        k = (1, 2, 3)[i % 3]
        sigma = 1.0 if i % 2 == 0 else 1.25
        shape = FamilyShape("spherical-gaussian", k=k, sigma=sigma)
        while True:
            p = spherical_gaussian(rng.random(k), sigma)
            q = spherical_gaussian(rng.random(k), sigma)
            kl = kl_divergence(p, q)
            if kl >= 0.02:
                break
        gamma = min(1.0, kl, 0.5 * k * sigma * sigma)
        eclass = enumerate_event_class(shape, gamma)
        best = max(
            abs(event_probability(p, ev) - event_probability(q, ev))
            for ev in eclass.events
        )
        gauss_min_margin = min(gauss_min_margin, best - eclass.xi_bound)
        if best < eclass.xi_bound - 1e-12:
            gauss_violations += 1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="event-classes",
        passed=(prod_violations == 0 and gauss_violations == 0),
        metrics={
            "product_violations": prod_violations,
            "product_min_margin": prod_min_margin,
            "gaussian_violations": gauss_violations,
            "gaussian_min_margin": gauss_min_margin,
        },
        runtime_s=elapsed,
    )


def check_logsum(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Mixture-component bound KL(P || (1-w)P + wQ) <= w KL(P || Q), exact."""
    t0 = time.perf_counter()
    rng = _rng(seed, "logsum")
    shapes = [s for s in _DISCRETE_SHAPES if s.domain_size <= 4096]
    outcome_cache = {s: enumerate_outcomes(s) for s in shapes}
    violations = 0
    max_excess = -np.inf
    n = 1000
    for i in range(n):
        shape = shapes[i % len(shapes)]
        outcomes = outcome_cache[shape]
        p = _random_discrete_spec(shape, rng)
        q = _random_discrete_spec(shape, rng)
        w_q = float(rng.random())
        pv = pmf_vector(p, outcomes)
        qv = pmf_vector(q, outcomes)
        rv = (1.0 - w_q) * pv + w_q * qv
        kl_pr = float(np.sum(pv * np.log2(pv / rv)))
        excess = kl_pr - w_q * kl_divergence(p, q)
        max_excess = max(max_excess, excess)
        if excess > 1e-12:
            violations += 1
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="logsum",
        passed=(violations == 0),
        metrics={"triples": n, "violations": violations, "max_excess": max_excess},
        runtime_s=elapsed,
    )


def check_lecam(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Two-point lower bound on the tester's summed error probabilities."""
    t0 = time.perf_counter()
    rng = _rng(seed, "lecam")
    shape = FamilyShape("bernoulli-product", k=4, lam=0.01)
    m = 400
    eps_test = 0.012
    trials = 500
    q0 = bernoulli_product(np.full(4, 0.5), lam=shape.lam)
    results = {}
    passed = True
    for m_kl in (0.0, 0.1, 0.5):
        if m_kl == 0.0:
            q1 = q0
        else:
            kl_per_coord = (m_kl / m) / shape.k
            d = 0.5 * math.sqrt(1.0 - 2.0 ** (-2.0 * kl_per_coord))
            q1 = bernoulli_product(np.full(4, 0.5 + d), lam=shape.lam)
            assert abs(kl_divergence(q0, q1) * m - m_kl) < 1e-9
        e0 = np.mean(
            [two_point_test(sample(q0, rng, m), q0, shape, eps_test) != 0 for _ in range(trials)]
        )
        e1 = np.mean(
            [two_point_test(sample(q1, rng, m), q0, shape, eps_test) != 1 for _ in range(trials)]
        )
        total = float(e0 + e1)
        sigma = math.sqrt(e0 * (1 - e0) / trials + e1 * (1 - e1) / trials)
        bound = 1.0 - math.sqrt(m_kl * math.log(2.0) / 2.0)
        if m_kl == 0.0:
            ok = abs(total - 1.0) <= max(3.0 * sigma, 0.005)
        else:
            ok = total >= bound - 3.0 * sigma
        passed = passed and ok
        results[str(m_kl)] = {
            "error_sum": total, "bound": bound, "sigma": sigma, "ok": ok,
        }
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="lecam", passed=passed, metrics=results, runtime_s=elapsed
    )


def check_robustness(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Amplified list contains an epsilon-close spec despite a perturbed stream."""
    t0 = time.perf_counter()
    rng = _rng(seed, "robustness")
    shape = FamilyShape("bernoulli-product", k=8, lam=1e-3)
    m_p = 500
    delta = 0.1
    budget = RobustnessBudget.for_delta(m_p, delta)
    assert budget.r == 9
    q0 = bernoulli_product(np.full(8, 0.35), lam=shape.lam)
    q1 = bernoulli_product(np.full(8, 0.35 + 0.004), lam=shape.lam)
    stream_kl = kl_divergence(q0, q1)
    assert stream_kl <= budget.kl_tolerance
    eps = 0.02
    trials = 200
    successes = 0
    single_hits = 0
    for _ in range(trials):
        ys = sample(q1, rng, budget.r * m_p)
        specs = robust_learn_list(ys, shape, budget)
        close = [kl_divergence(q0, s) <= eps for s in specs]
        single_hits += sum(close)
        if any(close):
            successes += 1
    frac = successes / trials
    # single-run stability: each unamplified fit succeeds with probability
    # at least 1/4 under the perturbed stream
    single_frac = single_hits / (trials * budget.r)
    single_margin = 3.0 * math.sqrt(0.25 / (trials * budget.r))
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="robustness",
        passed=(frac >= 1.0 - delta and single_frac >= 0.25 - single_margin),
        metrics={
            "trials": trials,
            "success_fraction": frac,
            "required": 1.0 - delta,
            "single_run_fraction": single_frac,
            "single_run_floor": 0.25 - single_margin,
            "stream_kl": stream_kl,
            "kl_tolerance": budget.kl_tolerance,
            "r": budget.r,
        },
        runtime_s=elapsed,
    )


def check_ml_select(seed: int = DEFAULT_SEED) -> SuiteResult:
    """Planted-list selection picks an err <= 4 eps model at the bound's m."""
    t0 = time.perf_counter()
    rng = _rng(seed, "ml-select")
    lam = 2.0**-5
    shape = FamilyShape("bernoulli-product", k=2, lam=lam)
    m_cap = shape.budget().m_cap
    assert m_cap == 10.0
    eps, delta = 0.1, 0.15
    p0 = bernoulli_product([0.2, 0.8], lam=lam)
    p1 = bernoulli_product([0.8, 0.2], lam=lam)
    uni = bernoulli_product([0.5, 0.5], lam=lam)
    c = Concept("dictator", (1,))
    d2 = Concept("dictator", (2,))
    h0 = Concept("constant-zero")
    h1 = Concept("constant-one")
    context = ContextDistribution.uniform(2)
    target = TargetModel(concept=c, p0=p0, p1=p1, context_dist=context)
    models = [
        HypothesisModel(c, p0, p1),  # planted good model
        HypothesisModel(c, p1, p0),
        HypothesisModel(d2, p0, p1),
        HypothesisModel(d2, p1, p0),
        HypothesisModel(h0, p0, p0),
        HypothesisModel(h0, p1, p1),
        HypothesisModel(h1, p0, p0),
        HypothesisModel(h1, p1, p1),
        HypothesisModel(h0, uni, uni),
    ]
    errs = [model_error(target, t) for t in models]
    assert errs[0] <= eps and all(e >= 4 * eps for e in errs[1:])
    m_sel = ml_selection_sample_size(len(models), eps, delta, m_cap)
    formula_ok = m_sel == 26492
    candidates = CandidateModelList(
        tuple(CandidateModel(t, "planted", (i,)) for i, t in enumerate(models))
    )
    trials = 200
    successes = 0
    for _ in range(trials):
        sel = gen_sample_arrays(target, m_sel, rng)
        report = ml_select(candidates, sel, shape.budget())
        if errs[report.chosen_index] <= 4 * eps:
            successes += 1
    frac = successes / trials
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="ml-select",
        passed=(formula_ok and frac >= 1.0 - delta),
        metrics={
            "m_sel": m_sel,
            "m_sel_matches_bound": formula_ok,
            "trials": trials,
            "success_fraction": frac,
            "required": 1.0 - delta,
        },
        runtime_s=elapsed,
    )


def check_decomposition(seed: int = DEFAULT_SEED) -> SuiteResult:
    """err(T) equals mean log-loss minus mean conditional entropy."""
    t0 = time.perf_counter()
    rng = _rng(seed, "decomposition")
    lam = 0.01
    p0 = bernoulli_product([0.2, 0.5, 0.8], lam=lam)
    p1 = bernoulli_product([0.7, 0.3, 0.6], lam=lam)
    context = ContextDistribution.product(np.full(6, 0.6))
    target = TargetModel(
        concept=Concept("monotone-conjunction", (1, 2)),
        p0=p0,
        p1=p1,
        context_dist=context,
    )
    shape = FamilyShape("bernoulli-product", k=3, lam=lam)
    budget = shape.budget()
    hyps = [
        HypothesisModel(target.concept, p0, p1),
        HypothesisModel(
            Concept("dictator", (1,)),
            bernoulli_product([0.25, 0.45, 0.75], lam=lam),
            bernoulli_product([0.65, 0.35, 0.55], lam=lam),
        ),
    ]
    m = 100_000
    h_bar = mean_conditional_entropy(target)
    results = []
    passed = True
    for hyp in hyps:
        X, Y = gen_sample_arrays(target, m, rng)
        hv = hyp.hypothesis.evaluate(X).astype(bool)
        losses = np.empty(m)
        if (~hv).any():
            losses[~hv] = -log_density(hyp.q0, Y[~hv], budget)
        if hv.any():
            losses[hv] = -log_density(hyp.q1, Y[hv], budget)
        est = float(losses.mean()) - h_bar
        se = float(losses.std(ddof=1) / math.sqrt(m))
        exact = model_error(target, hyp)
        ok = abs(est - exact) <= 3.0 * se
        passed = passed and ok
        results.append(
            {"err_exact": exact, "err_from_loss": est, "se": se, "ok": ok}
        )
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        name="decomposition",
        passed=passed,
        metrics={"cases": results, "mean_entropy": h_bar},
        runtime_s=elapsed,
    )


SUITES = {
    "lab-identity": check_lab_identity,
    "noise-bounds": check_noise_bounds,
    "admit": check_admit,
    "approxdist": check_approxdist,
    "event-classes": check_event_classes,
    "logsum": check_logsum,
    "lecam": check_lecam,
    "robustness": check_robustness,
    "ml-select": check_ml_select,
    "decomposition": check_decomposition,
}

SUITE_NAMES = tuple(SUITES)


def verify_suite(which: str = "all", seed: int = DEFAULT_SEED) -> list[SuiteResult]:
    """Run one named suite or all of them."""
    if which == "all":
        return [fn(seed) for fn in SUITES.values()]
    if which not in SUITES:
        raise ValueError(f"unknown suite {which!r}; have {sorted(SUITES)} or 'all'")
    return [SUITES[which](seed)]
