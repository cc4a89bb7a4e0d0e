import numpy as np
import pytest

from pwdlab.distlearn import (
    RobustnessBudget,
    direct_unhealthy_learn,
    robust_learn_list,
    separate_and_learn,
    two_point_test,
    unhealthy_threshold,
)
from pwdlab.distributions import (
    FamilyShape,
    bernoulli_product,
    kl_divergence,
    sample,
)
from pwdlab.errors import InsufficientSampleError
from pwdlab.model import (
    Concept,
    ContextDistribution,
    TargetModel,
    model_error,
)

from conftest import make_rng


def test_amplification_counts():
    assert RobustnessBudget.for_delta(100, 0.1).r == 9
    assert RobustnessBudget.for_delta(100, 0.25).r == 5
    assert RobustnessBudget.for_delta(500, 0.1).kl_tolerance == pytest.approx(1e-3)


def test_amplification_delta_precondition():
    with pytest.raises(ValueError):
        RobustnessBudget.for_delta(100, 0.3)


def test_robust_list_insufficient_stream():
    shape = FamilyShape("bernoulli-product", k=2, lam=0.01)
    budget = RobustnessBudget.for_delta(100, 0.1)
    with pytest.raises(InsufficientSampleError):
        robust_learn_list(np.zeros((500, 2), dtype=np.int8), shape, budget)


def test_robust_list_unperturbed_stream():
    """Stream drawn exactly from the target: every entry is accurate in at
    least 1 - delta of trials."""
    shape = FamilyShape("bernoulli-product", k=8, lam=1e-3)
    spec = bernoulli_product(np.linspace(0.2, 0.8, 8), lam=1e-3)
    budget = RobustnessBudget.for_delta(500, 0.1)
    rng = make_rng(60)
    eps = 0.04
    good = 0
    for _ in range(20):
        ys = sample(spec, rng, budget.r * budget.m_p)
        specs = robust_learn_list(ys, shape, budget)
        assert len(specs) == budget.r
        good += all(kl_divergence(spec, s) <= eps for s in specs)
    assert good >= 18


def test_two_point_test_accepts_own_distribution():
    shape = FamilyShape("bernoulli-product", k=4, lam=0.01)
    spec = bernoulli_product([0.3, 0.4, 0.6, 0.7], lam=0.01)
    rng = make_rng(61)
    outcomes = sample(spec, rng, 5000)
    assert two_point_test(outcomes, spec, shape, epsilon=0.05) == 0
    far = bernoulli_product([0.9, 0.9, 0.1, 0.1], lam=0.01)
    assert two_point_test(outcomes, far, shape, epsilon=0.05) == 1


def _product_target(n, p0_bias, p1_bias, concept, lam=1e-3, k=8):
    p0 = bernoulli_product(np.full(k, p0_bias), lam=lam)
    p1 = bernoulli_product(np.full(k, p1_bias), lam=lam)
    return TargetModel(concept, p0, p1, ContextDistribution.uniform(n))


def test_separate_with_exact_hypothesis():
    target = _product_target(6, 0.3, 0.7, Concept("monotone-conjunction", (1, 2)))
    shape = target.p0.structure()
    good = 0
    for t in range(10):
        res = separate_and_learn(
            target, target.concept, 0.1, 0.2, shape, make_rng(62, t),
            m_p=1000, side_floor=0.2, n_cap=60_000,
        )
        best = min(model_error(target, m) for m in res.models)
        good += best <= 0.1
    assert good >= 8


def test_separate_starved_side_emits_default():
    target = _product_target(4, 0.4, 0.6, Concept("monotone-conjunction", (1, 2)))
    shape = target.p0.structure()
    h = Concept("constant-zero")
    res = separate_and_learn(
        target, h, 0.1, 0.2, shape, make_rng(63), m_p=500, side_floor=0.2,
        n_cap=20_000,
    )
    assert res.starved == (False, True)
    assert len(res.specs1) == 1
    assert np.all(res.specs1[0].biases == 0.5)
    assert all(m.hypothesis == h for m in res.models)


def test_separate_list_size_r_squared():
    target = _product_target(4, 0.3, 0.7, Concept("dictator", (1,)), k=4)
    shape = target.p0.structure()
    res = separate_and_learn(
        target, target.concept, 0.1, 0.1, shape, make_rng(64),
        m_p=300, side_floor=0.2, n_cap=30_000,
    )
    # delta = 0.1 gives r = 9 per side, so 81 models
    assert len(res.models) == 81
    assert res.side_counts[0] + res.side_counts[1] == res.draws_used


def test_separate_draw_request_capped():
    target = _product_target(4, 0.3, 0.7, Concept("dictator", (1,)), k=4)
    shape = target.p0.structure()
    res = separate_and_learn(
        target, target.concept, 0.1, 0.1, shape, make_rng(65),
        m_p=300, side_floor=0.001, n_cap=10_000,
    )
    assert res.draws_used == 10_000
    assert res.draws_requested > 10_000


def test_direct_identical_distributions():
    target = _product_target(4, 0.35, 0.35, Concept("dictator", (1,)))
    shape = target.p0.structure()
    specs = direct_unhealthy_learn(
        target, 0.1, 0.1, shape, make_rng(66), m_p=1000
    )
    assert len(specs) == 9
    assert any(kl_divergence(target.p0, s) <= 0.05 for s in specs)


def test_direct_concept_never_fires():
    target = _product_target(4, 0.3, 0.9, Concept("constant-zero"))
    shape = target.p0.structure()
    specs = direct_unhealthy_learn(target, 0.1, 0.1, shape, make_rng(67), m_p=1000)
    assert any(kl_divergence(target.p0, s) <= 0.05 for s in specs)


def test_direct_tiny_positive_weight():
    """w1 = 1e-3: some direct spec achieves small expected conditional KL."""
    lam = 1e-3
    p0 = bernoulli_product(np.full(8, 0.3), lam=lam)
    p1 = bernoulli_product(np.full(8, 0.7), lam=lam)
    bias = np.full(10, 0.5)
    bias[:2] = np.sqrt(0.001)
    target = TargetModel(
        Concept("monotone-conjunction", (1, 2)), p0, p1,
        ContextDistribution.product(bias),
    )
    shape = p0.structure()
    hits = 0
    for t in range(5):
        specs = direct_unhealthy_learn(target, 0.1, 0.1, shape, make_rng(68, t), m_p=1000)
        h0 = Concept("constant-zero")
        from pwdlab.model import HypothesisModel

        best = min(
            model_error(target, HypothesisModel(h0, s, s)) for s in specs
        )
        hits += best <= 0.1
    assert hits >= 4


def test_unhealthy_threshold_formula():
    # g = max(2 M m / eps, 2 m)
    assert unhealthy_threshold(0.1, 1000, 10.0) == pytest.approx(1.0 / 200_000)
    assert unhealthy_threshold(100.0, 1000, 10.0) == pytest.approx(1.0 / 2000)
