import numpy as np
import pytest

from pwdlab.cccn import guess_grid
from pwdlab.distributions import bernoulli_product, spherical_gaussian
from pwdlab.errors import BudgetExceededError
from pwdlab.model import (
    Concept,
    ContextDistribution,
    HypothesisModel,
    TargetModel,
    gen_sample_arrays,
    model_error,
)
from pwdlab.reductions import (
    CandidateModel,
    CandidateModelList,
    PipelineConfig,
    direct_learn,
    forward_learn,
    gamma_dispatch,
    ml_select,
    ml_selection_sample_size,
    reverse_learn,
    separate_error_threshold,
)
from pwdlab.rng import StreamTree


def _small_forward_target(p0_bias=0.2, p1_bias=0.8):
    lam = 0.01
    p0 = bernoulli_product(np.full(2, p0_bias), lam=lam)
    p1 = bernoulli_product(np.full(2, p1_bias), lam=lam)
    return TargetModel(
        Concept("monotone-conjunction", (1, 2)), p0, p1, ContextDistribution.uniform(4)
    )


_SMALL_CFG = PipelineConfig(
    m_p=100,
    restarts=4,
    m_mix=600,
    side_floor=0.25,
    n_cap=4000,
    draw_budget=2_000_000,
    m_cn=100,
    m_sel=400,
    xi=0.5,
    epsilon_cn=0.2,
    eta=0.3,
)


def test_ml_selection_sample_size_worked_example():
    assert ml_selection_sample_size(9, 0.1, 0.15, 10.0) == 26492


def test_separate_error_threshold_formula():
    assert separate_error_threshold(0.1, 10.0, 1000) == pytest.approx(5e-6)


def test_ml_select_tie_break_first_index():
    target = _small_forward_target()
    model = HypothesisModel(target.concept, target.p0, target.p1)
    candidates = CandidateModelList(
        tuple(CandidateModel(model, "planted", (i,)) for i in range(5))
    )
    sel = gen_sample_arrays(target, 500, StreamTree(3).generator())
    report = ml_select(candidates, sel, target.p0.structure().budget())
    assert report.chosen_index == 0
    assert np.allclose(report.losses, report.losses[0])


def test_ml_select_prefers_accurate_model():
    target = _small_forward_target()
    good = HypothesisModel(target.concept, target.p0, target.p1)
    bad = HypothesisModel(target.concept, target.p1, target.p0)
    candidates = CandidateModelList(
        (CandidateModel(bad, "planted", (0,)), CandidateModel(good, "planted", (1,)))
    )
    sel = gen_sample_arrays(target, 4000, StreamTree(4).generator())
    report = ml_select(candidates, sel, target.p0.structure().budget())
    assert report.chosen_index == 1


def test_forward_structural_counts():
    """Every (event, grid-pair) slot contributes a full cross product of its
    hypothesis's side lists: r x r when both sides are populated (the
    all-negative placeholder hypothesis always starves side 1, so the
    idealized |E| * |grid| * r^2 count is an upper bound, not an identity)."""
    target = _small_forward_target()
    shape = target.p0.structure()
    result = forward_learn(
        target, shape, 0.2, 0.2, 0.3, _SMALL_CFG, StreamTree(5).child(0)
    )
    n_events = result.diagnostics["n_events"]
    n_pairs = result.diagnostics["n_grid_pairs"]
    assert n_events == 4
    assert n_pairs == len(guess_grid(0.5).pairs)
    assert result.diagnostics["n_direct"] == 6  # r at delta = 0.2
    event_cands = [c for c in result.candidates if c.provenance == "forward-event"]
    slots: dict[tuple, list] = {}
    for c in event_cands:
        ei, pi, i, j = c.source
        slots.setdefault((ei, pi), []).append((i, j))
    # every slot present exactly once per (i, j) combination
    assert set(slots) == {(ei, pi) for ei in range(n_events) for pi in range(n_pairs)}
    r = 6
    for pairs in slots.values():
        n0 = max(i for i, _ in pairs) + 1
        n1 = max(j for _, j in pairs) + 1
        assert sorted(pairs) == [(i, j) for i in range(n0) for j in range(n1)]
        assert n0 <= r and n1 <= r
    # populated hypotheses contribute the full r^2 cross product
    assert max(len(p) for p in slots.values()) == r * r
    assert len(result.candidates) == sum(len(p) for p in slots.values()) + 6
    assert len(result.candidates) <= n_events * n_pairs * r * r + 6
    assert 0 <= result.report.chosen_index < len(result.candidates)
    assert result.draws_used <= _SMALL_CFG.draw_budget


def test_forward_easy_instance_learns():
    target = _small_forward_target()
    shape = target.p0.structure()
    result = forward_learn(
        target, shape, 0.2, 0.2, 0.3, _SMALL_CFG, StreamTree(6).child(0)
    )
    assert model_error(target, result.chosen) <= 0.2


def test_selection_soundness_within_three_epsilon():
    """The chosen model's error never exceeds the best candidate's by more
    than 3 epsilon (the good/bad threshold argument behind the selection)."""
    epsilon = 0.2
    target = _small_forward_target()
    shape = target.p0.structure()
    result = forward_learn(
        target, shape, epsilon, 0.2, 0.3, _SMALL_CFG, StreamTree(13).child(0)
    )
    errs_by_id: dict[int, float] = {}
    best = float("inf")
    for cand in result.candidates:
        key = id(cand.model)
        if key not in errs_by_id:
            errs_by_id[key] = model_error(target, cand.model)
        best = min(best, errs_by_id[key])
    chosen_err = model_error(target, result.chosen)
    assert chosen_err <= best + 3 * epsilon


def test_forward_budget_refusal_is_loud():
    target = _small_forward_target()
    shape = target.p0.structure()
    cfg = PipelineConfig(
        m_p=100, m_cn=100, m_sel=400, xi=0.5, epsilon_cn=0.2, draw_budget=1000,
        side_floor=0.25, n_cap=4000,
    )
    with pytest.raises(BudgetExceededError):
        forward_learn(target, shape, 0.2, 0.2, 0.3, cfg, StreamTree(7).child(0))


def _reverse_target(w1_bias):
    p0 = spherical_gaussian([0.2, 0.2], 1.0, mean_box=(0.0, 3.0))
    p1 = spherical_gaussian([2.8, 2.8], 1.0, mean_box=(0.0, 3.0))
    biases = np.full(4, 0.5)
    biases[0] = w1_bias
    return TargetModel(
        Concept("dictator", (1,)), p0, p1, ContextDistribution.product(biases)
    )


def test_reverse_component_swap_completeness():
    target = _reverse_target(0.5)
    shape = target.p0.structure()
    result = reverse_learn(
        target, shape, 0.3, 0.2, 0.05, _SMALL_CFG, StreamTree(8).child(0)
    )
    events = result.diagnostics["reverse_events"]
    assert {e["order"] for e in events} == {0, 1}
    assert any(e["kind"] == "fallback" for e in events)
    provs = {c.provenance for c in result.candidates}
    assert "reverse-direct" in provs and "reverse-mixture" in provs
    assert model_error(target, result.chosen) <= 0.3


def test_reverse_unhealthy_goes_direct_only():
    # concept never fires: the mixture is a single Gaussian
    p0 = spherical_gaussian([0.2, 0.2], 1.0, mean_box=(0.0, 3.0))
    p1 = spherical_gaussian([2.8, 2.8], 1.0, mean_box=(0.0, 3.0))
    target = TargetModel(
        Concept("constant-zero"), p0, p1, ContextDistribution.uniform(4)
    )
    shape = p0.structure()
    result = reverse_learn(
        target, shape, 0.3, 0.2, 0.05, _SMALL_CFG, StreamTree(9).child(0)
    )
    assert not result.diagnostics["health"].healthy
    assert {c.provenance for c in result.candidates} == {"reverse-direct"}
    assert model_error(target, result.chosen) <= 0.3


def test_direct_learn_pipeline():
    target = _small_forward_target(0.4, 0.4)
    shape = target.p0.structure()
    result = direct_learn(target, shape, 0.2, 0.2, _SMALL_CFG, StreamTree(10).child(0))
    assert len(result.candidates) == 6
    assert model_error(target, result.chosen) <= 0.2


def test_forward_pipeline_on_bary_family():
    """The forward machinery is family-generic: run it end to end on a
    three-symbol product target."""
    from pwdlab.distributions import bary_product

    lam = 0.01
    p0 = bary_product([[0.9, 0.05, 0.05], [0.05, 0.9, 0.05]], lam=lam)
    p1 = bary_product([[0.05, 0.05, 0.9], [0.9, 0.05, 0.05]], lam=lam)
    target = TargetModel(
        Concept("monotone-conjunction", (1, 2)), p0, p1,
        ContextDistribution.uniform(4),
    )
    shape = p0.structure()
    result = forward_learn(
        target, shape, 0.25, 0.2, 0.3, _SMALL_CFG, StreamTree(14).child(0)
    )
    assert result.diagnostics["n_events"] == 6  # k * b
    assert model_error(target, result.chosen) <= 0.25


def test_forward_pipeline_on_gaussian_family():
    """Threshold events drive the forward pipeline for Gaussian targets."""
    p0 = spherical_gaussian([0.1], 1.0)
    p1 = spherical_gaussian([0.9], 1.0)
    target = TargetModel(
        Concept("monotone-conjunction", (1, 2)), p0, p1,
        ContextDistribution.uniform(4),
    )
    cfg = PipelineConfig(
        m_p=150, side_floor=0.25, n_cap=8000, draw_budget=3_000_000,
        m_cn=250, m_sel=1500, xi=0.3, epsilon_cn=0.2,
    )
    result = forward_learn(
        target, p0.structure(), 0.3, 0.2, 0.05, cfg, StreamTree(21).child(0)
    )
    assert result.diagnostics["n_events"] == 4  # k * (grid points)
    assert model_error(target, result.chosen) <= 0.3


def test_candidate_list_never_empty():
    with pytest.raises(ValueError):
        CandidateModelList(())


def test_gamma_dispatch_tautology():
    # with gamma = eta the two branches cover every target
    rng = np.random.default_rng(11)
    for _ in range(50):
        lam = 0.01
        p0 = bernoulli_product(rng.uniform(lam, 1 - lam, 3), lam=lam)
        p1 = bernoulli_product(rng.uniform(lam, 1 - lam, 3), lam=lam)
        concept = Concept("dictator", (1,))
        d = ContextDistribution.product(rng.uniform(0, 1, 3))
        target = TargetModel(concept, p0, p1, d)
        level = float(rng.uniform(1e-6, 0.5))
        info = gamma_dispatch(target, gamma=level, eta_direct=level)
        assert info["covered"]


def test_pipeline_determinism():
    target = _small_forward_target()
    shape = target.p0.structure()
    r1 = forward_learn(target, shape, 0.2, 0.2, 0.3, _SMALL_CFG, StreamTree(12).child(0))
    r2 = forward_learn(target, shape, 0.2, 0.2, 0.3, _SMALL_CFG, StreamTree(12).child(0))
    assert r1.report.chosen_index == r2.report.chosen_index
    assert np.array_equal(r1.report.losses, r2.report.losses)
    assert r1.chosen == r2.chosen
