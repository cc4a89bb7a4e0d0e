import math

import numpy as np
import pytest

from pwdlab.distributions import (
    BoundednessBudget,
    bernoulli_product,
    enumerate_outcomes,
    pmf_vector,
    spherical_gaussian,
)
from pwdlab.errors import FamilyMismatchError
from pwdlab.model import (
    Concept,
    ContextDistribution,
    HypothesisModel,
    TargetModel,
    classification_error,
    concept_probability,
    empirical_log_loss,
    enumerate_concepts,
    gen_sample,
    gen_sample_arrays,
    joint_cells,
    mean_conditional_entropy,
    model_error,
)

from conftest import make_rng


def _uniform_target(n=4, p0=None, p1=None, concept=None, lam=0.01):
    p0 = p0 if p0 is not None else bernoulli_product([0.25, 0.5], lam=lam)
    p1 = p1 if p1 is not None else bernoulli_product([0.75, 0.5], lam=lam)
    concept = concept if concept is not None else Concept("dictator", (1,))
    return TargetModel(concept, p0, p1, ContextDistribution.uniform(n))


# -- concepts -------------------------------------------------------------------


def test_concept_validation():
    with pytest.raises(ValueError):
        Concept("dictator", (1, 2))
    with pytest.raises(ValueError):
        Concept("monotone-conjunction", (2, 2))
    with pytest.raises(ValueError):
        Concept("monotone-conjunction", (0, 1))
    with pytest.raises(ValueError):
        Concept("constant-zero", (1,))
    assert Concept("monotone-conjunction", (3, 1)).variables == (1, 3)


def test_enumerate_concepts_counts_and_order():
    concepts = enumerate_concepts(10, max_conjunction=2)
    assert len(concepts) == 2 + 10 + 45
    assert concepts[0].kind == "constant-zero"
    assert concepts[1].kind == "constant-one"
    assert concepts[2] == Concept("dictator", (1,))


def test_concept_evaluation():
    X = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    c = Concept("monotone-conjunction", (1, 2))
    assert list(c.evaluate(X)) == [1, 0, 0]
    assert list(Concept("constant-one").evaluate(X)) == [1, 1, 1]
    assert Concept("dictator", (3,)).evaluate(X[1]) == 1


def test_concept_probability_product():
    d = ContextDistribution.product([0.5, 0.2, 0.9])
    assert concept_probability(Concept("monotone-conjunction", (2, 3)), d) == pytest.approx(0.18)
    assert concept_probability(Concept("constant-zero"), d) == 0.0
    assert concept_probability(Concept("constant-one"), d) == 1.0


# -- generative oracle ------------------------------------------------------------


def test_gen_constant_zero_draws_only_p0():
    lam = 0.001
    p0 = bernoulli_product([0.2, 0.9], lam=lam)
    p1 = bernoulli_product([0.9, 0.2], lam=lam)
    target = TargetModel(Concept("constant-zero"), p0, p1, ContextDistribution.uniform(3))
    _, Y = gen_sample_arrays(target, 100_000, make_rng(20))
    for j, bias in enumerate(p0.biases):
        se = math.sqrt(bias * (1 - bias) / 100_000)
        assert abs(Y[:, j].mean() - bias) <= 3 * se


def test_gen_dictator_context_balance():
    target = _uniform_target(concept=Concept("dictator", (1,)))
    X, _ = gen_sample_arrays(target, 100_000, make_rng(21))
    assert abs(X[:, 0].mean() - 0.5) <= 0.005


def test_gen_determinism_fixed_seed():
    target = _uniform_target()
    a = gen_sample(target, 3, make_rng(42))
    b = gen_sample(target, 3, make_rng(42))
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.context, pb.context)
        assert np.array_equal(pa.outcome, pb.outcome)


def test_gen_marginal_is_mixture():
    """Empirical outcome frequencies match w0 P0 + w1 P1 on a small domain."""
    lam = 0.01
    p0 = bernoulli_product([0.2, 0.6], lam=lam)
    p1 = bernoulli_product([0.8, 0.3], lam=lam)
    concept = Concept("monotone-conjunction", (1, 2))
    target = TargetModel(concept, p0, p1, ContextDistribution.uniform(4))
    w1 = concept_probability(concept, target.context_dist)
    outcomes = enumerate_outcomes(p0.structure())
    mix = (1 - w1) * pmf_vector(p0, outcomes) + w1 * pmf_vector(p1, outcomes)
    m = 200_000
    _, Y = gen_sample_arrays(target, m, make_rng(22))
    codes = Y[:, 0].astype(np.int64) * 2 + Y[:, 1]
    freq = np.bincount(codes, minlength=4) / m
    se = np.sqrt(mix * (1 - mix) / m)
    assert np.all(np.abs(freq - mix) <= 4 * se)


# -- joint cells and the error functional --------------------------------------------


def test_joint_cells_closed_form_matches_enumeration():
    rng = make_rng(23)
    concepts = enumerate_concepts(6, max_conjunction=2)
    d = ContextDistribution.product(rng.uniform(0.1, 0.9, 6))
    for _ in range(60):
        c = concepts[rng.integers(len(concepts))]
        h = concepts[rng.integers(len(concepts))]
        a = joint_cells(c, h, d, mode="closed-form")
        b = joint_cells(c, h, d, mode="enumeration")
        assert np.allclose(a, b, atol=1e-12)
        assert a.sum() == pytest.approx(1.0, abs=1e-12)


def test_model_error_zero_for_exact_hypothesis():
    target = _uniform_target()
    hyp = HypothesisModel(target.concept, target.p0, target.p1)
    assert model_error(target, hyp) == 0.0


def test_model_error_identical_distributions_any_hypothesis():
    lam = 0.01
    p = bernoulli_product([0.4], lam=lam)
    target = TargetModel(
        Concept("dictator", (1,)), p, p, ContextDistribution.uniform(1)
    )
    hyp = HypothesisModel(Concept("constant-zero"), p, p)
    assert model_error(target, hyp) == 0.0


def test_model_error_four_cell_hand_value():
    lam = 0.01
    p0 = bernoulli_product([0.25], lam=lam)
    p1 = bernoulli_product([0.75], lam=lam)
    target = TargetModel(Concept("dictator", (1,)), p0, p1, ContextDistribution.uniform(2))
    hyp = HypothesisModel(Concept("dictator", (2,)), p0, p1)
    expected = 0.5 * (0.5 * math.log2(3.0))
    assert model_error(target, hyp) == pytest.approx(expected, abs=1e-12)


def test_model_error_montecarlo_agrees_with_exact():
    target = _uniform_target(concept=Concept("monotone-conjunction", (1, 2)))
    hyp = HypothesisModel(Concept("dictator", (1,)), target.p1, target.p0)
    exact = model_error(target, hyp)
    est, se = model_error(target, hyp, mode="montecarlo", rng=make_rng(24), draws=200_000)
    assert abs(est - exact) <= 4 * se


def test_model_error_family_mismatch():
    target = _uniform_target()
    g = spherical_gaussian([0.5, 0.5], sigma=1.0)
    with pytest.raises(FamilyMismatchError):
        model_error(target, HypothesisModel(target.concept, g, g))


def test_classification_error_values():
    d = ContextDistribution.uniform(4)
    c = Concept("monotone-conjunction", (1, 2))
    assert classification_error(c, c, d) == 0.0
    assert classification_error(c, Concept("constant-zero"), d) == pytest.approx(0.25)
    assert classification_error(c, Concept("dictator", (1,)), d) == pytest.approx(0.25)


# -- log loss ---------------------------------------------------------------------


def test_empirical_log_loss_half_probability_pair():
    lam = 0.01
    spec = bernoulli_product([0.5], lam=lam)
    hyp = HypothesisModel(Concept("constant-zero"), spec, spec)
    budget = spec.structure().budget()
    X = np.zeros((1, 2), dtype=np.uint8)
    Y = np.zeros((1, 1), dtype=np.int8)
    assert empirical_log_loss(hyp, (X, Y), budget) == pytest.approx(1.0)


def test_empirical_log_loss_accepts_labeled_pairs():
    target = _uniform_target()
    hyp = HypothesisModel(target.concept, target.p0, target.p1)
    budget = target.p0.structure().budget()
    pairs = gen_sample(target, 50, make_rng(26))
    X = np.stack([p.context for p in pairs])
    Y = np.stack([p.outcome for p in pairs])
    assert empirical_log_loss(hyp, pairs, budget) == pytest.approx(
        empirical_log_loss(hyp, (X, Y), budget)
    )


def test_empirical_log_loss_additivity():
    lam = 0.01
    spec = bernoulli_product([0.3, 0.9], lam=lam)
    hyp = HypothesisModel(Concept("constant-one"), spec, spec)
    budget = spec.structure().budget()
    X = np.zeros((1, 2), dtype=np.uint8)
    Y = np.array([[1, 0]], dtype=np.int8)
    single = empirical_log_loss(hyp, (X, Y), budget)
    double = empirical_log_loss(
        hyp, (np.vstack([X, X]), np.vstack([Y, Y])), budget
    )
    assert double == pytest.approx(2 * single, abs=1e-12)


def test_log_loss_rate_matches_entropy_for_exact_model():
    """At the exact model the per-draw loss converges to the mean conditional
    entropy (the error term vanishes)."""
    lam = 0.01
    p0 = bernoulli_product([0.2, 0.7], lam=lam)
    p1 = bernoulli_product([0.6, 0.4], lam=lam)
    concept = Concept("monotone-conjunction", (1, 2))
    target = TargetModel(concept, p0, p1, ContextDistribution.uniform(5))
    hyp = HypothesisModel(concept, p0, p1)
    budget = p0.structure().budget()
    m = 100_000
    X, Y = gen_sample_arrays(target, m, make_rng(25))
    loss_rate = empirical_log_loss(hyp, (X, Y), budget) / m
    expected = mean_conditional_entropy(target)
    # per-sample losses are bounded by a few bits; 3 standard errors
    hv = hyp.hypothesis.evaluate(X).astype(bool)
    from pwdlab.distributions import log_density

    losses = np.where(hv, -log_density(p1, Y), -log_density(p0, Y))
    se = losses.std(ddof=1) / math.sqrt(m)
    assert abs(loss_rate - expected) <= 3 * se
