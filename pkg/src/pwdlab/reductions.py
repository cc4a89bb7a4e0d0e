"""The two reduction pipelines and maximum-likelihood model selection.

The forward pipeline enumerates candidate distinguishing events, learns the
concept through each one, separates the outcome stream with every learned
hypothesis, and always adds direct context-free fits as a fallback for
near-identical target distributions. The reverse pipeline first fits a
two-component mixture; when the fit is healthy it constructs
likelihood-ratio events from the fitted components (both orderings, since
component labels are not identifiable) and proceeds as before. Either way a
fresh sample selects the final model by minimal empirical log-loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .budget import DrawBudget
from .cccn import learn_with_event
from .distlearn import direct_unhealthy_learn, separate_and_learn
from .distributions import FamilyShape, kl_divergence, log_density
from .errors import ExactComputationError
from .events import (
    Event,
    enumerate_event_class,
    event_from_approximations,
    event_probability,
    likelihood_ratio_event,
)
from .mixture import em_fit_2mixture, health_check
from .model import (
    Concept,
    HypothesisModel,
    TargetModel,
    concept_probability,
    enumerate_concepts,
    gen_sample_arrays,
)
from .rng import (
    STAGE_DIRECT,
    STAGE_LAB,
    STAGE_MIX,
    STAGE_SELECT,
    STAGE_SEPARATE,
    StreamTree,
)

PROV_FORWARD_EVENT = "forward-event"
PROV_FORWARD_DIRECT = "forward-direct"
PROV_REVERSE_MIXTURE = "reverse-mixture"
PROV_REVERSE_DIRECT = "reverse-direct"


@dataclass(frozen=True)
class PipelineConfig:
    """Desk-scale resource knobs for the pipelines.

    The None-valued overrides fall back to the theory-derived formulas,
    which are far too conservative to run at desk scale; bundled scenarios
    set explicit values.
    """

    m_p: int = 2000
    restarts: int = 8
    m_mix: int = 5000
    side_floor: float = 0.05
    n_cap: int = 200_000
    draw_budget: int = 10_000_000
    m_cn: int | None = None
    m_sel: int | None = None
    xi: float | None = None
    epsilon_cn: float | None = None
    alpha_mix: float = 0.05
    xi_floor: float = 0.05
    xi_safety: float = 0.8
    max_conjunction: int = 2
    eta: float | None = None


@dataclass(frozen=True)
class CandidateModel:
    """A hypothesis model with its provenance tag and source coordinates."""

    model: HypothesisModel
    provenance: str
    source: tuple


@dataclass(frozen=True)
class CandidateModelList:
    models: tuple[CandidateModel, ...]

    def __post_init__(self):
        if not self.models:
            raise ValueError("candidate list must be nonempty")

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i: int) -> CandidateModel:
        return self.models[i]


@dataclass(frozen=True)
class MLSelectionReport:
    """Per-model empirical log-loss in bits and the minimizing index."""

    chosen_index: int
    losses: np.ndarray
    m_sel: int


def ml_selection_sample_size(
    n_models: int, epsilon: float, delta: float, m_cap: float
) -> int:
    """Sample size making the selection failure bound at most delta/3.

    From the concentration bound delta <= (|T|+1) exp(-2 m eps^2 / M^2).
    """
    return math.ceil(
        (m_cap * m_cap / (2.0 * epsilon * epsilon))
        * math.log(3.0 * (n_models + 1) / delta)
    )


def separate_error_threshold(epsilon: float, m_cap: float, m_p: int) -> float:
    """Largest hypothesis error for which side-splitting provably works:
    err(h) <= eps / (2 M m_p) keeps each side stream inside the robust
    learner's KL tolerance."""
    return epsilon / (2.0 * m_cap * m_p)


def ml_select(
    candidates: CandidateModelList,
    selection_sample: tuple[np.ndarray, np.ndarray],
    budget_cap,
) -> MLSelectionReport:
    """Pick the candidate with minimal empirical log-loss; ties by index.

    Losses are computed with the clamped evaluator. Work is shared across
    the list: models with the same hypothesis share side masks, and each
    (hypothesis, spec) side sum is computed once.
    """
    X, Y = selection_sample
    if X.shape[0] < 1:
        raise ValueError("selection sample must be nonempty")
    losses = np.empty(len(candidates), dtype=np.float64)
    groups: dict[Concept, list[int]] = {}
    for i, cand in enumerate(candidates):
        groups.setdefault(cand.model.hypothesis, []).append(i)
    for h, idxs in groups.items():
        mask = h.evaluate(X).astype(bool)
        side0: dict[int, float] = {}
        side1: dict[int, float] = {}
        for i in idxs:
            q0 = candidates[i].model.q0
            q1 = candidates[i].model.q1
            k0, k1 = id(q0), id(q1)
            if k0 not in side0:
                side0[k0] = (
                    -float(np.sum(log_density(q0, Y[~mask], budget_cap)))
                    if (~mask).any()
                    else 0.0
                )
            if k1 not in side1:
                side1[k1] = (
                    -float(np.sum(log_density(q1, Y[mask], budget_cap)))
                    if mask.any()
                    else 0.0
                )
            losses[i] = side0[k0] + side1[k1]
    chosen = int(np.argmin(losses))
    return MLSelectionReport(chosen_index=chosen, losses=losses, m_sel=int(X.shape[0]))


@dataclass(frozen=True)
class PipelineResult:
    chosen: HypothesisModel
    chosen_index: int
    candidates: CandidateModelList
    report: MLSelectionReport
    draws_used: int
    diagnostics: dict = field(default_factory=dict)


def _collect_event_stage(
    target: TargetModel,
    events: tuple[Event, ...],
    xi_per_event,
    epsilon_cn: float,
    delta: float,
    concepts,
    cfg: PipelineConfig,
    tree: StreamTree,
    budget: DrawBudget,
):
    """Run learn_with_event for each event; returns per-event results."""
    results = []
    for ei, ev in enumerate(events):
        rng = tree.child(STAGE_LAB, ei).generator()
        results.append(
            learn_with_event(
                target,
                ev,
                xi_per_event[ei],
                epsilon_cn,
                delta,
                concepts,
                rng,
                m_override=cfg.m_cn,
                budget=budget,
            )
        )
    return results


def _separate_stage(
    target: TargetModel,
    unique_hyps: list[Concept],
    epsilon: float,
    delta: float,
    shape: FamilyShape,
    cfg: PipelineConfig,
    tree: StreamTree,
    budget: DrawBudget,
):
    """Separate-and-learn once per unique hypothesis (results are shared by
    every candidate-list slot carrying that hypothesis)."""
    out = {}
    for hi, h in enumerate(unique_hyps):
        rng = tree.child(STAGE_SEPARATE, hi).generator()
        out[h] = separate_and_learn(
            target,
            h,
            epsilon,
            delta,
            shape,
            rng,
            m_p=cfg.m_p,
            side_floor=cfg.side_floor,
            n_cap=cfg.n_cap,
            budget=budget,
        )
    return out


def _finish(
    target: TargetModel,
    shape: FamilyShape,
    candidates: list[CandidateModel],
    epsilon: float,
    delta: float,
    cfg: PipelineConfig,
    tree: StreamTree,
    budget: DrawBudget,
    diagnostics: dict,
) -> PipelineResult:
    clist = CandidateModelList(tuple(candidates))
    m_cap = shape.budget().m_cap
    m_sel = (
        cfg.m_sel
        if cfg.m_sel is not None
        else ml_selection_sample_size(len(clist), epsilon, delta, m_cap)
    )
    budget.spend(m_sel)
    rng = tree.child(STAGE_SELECT).generator()
    sel_sample = gen_sample_arrays(target, m_sel, rng)
    report = ml_select(clist, sel_sample, shape.budget())
    diagnostics["n_candidates"] = len(clist)
    return PipelineResult(
        chosen=clist[report.chosen_index].model,
        chosen_index=report.chosen_index,
        candidates=clist,
        report=report,
        draws_used=budget.used,
        diagnostics=diagnostics,
    )


def _dedup_hypotheses(event_results) -> list[Concept]:
    seen: dict[Concept, None] = {}
    for res in event_results:
        for h in res.hypotheses:
            seen.setdefault(h, None)
    return list(seen)


def forward_learn(
    target: TargetModel,
    shape: FamilyShape,
    epsilon: float,
    delta: float,
    gamma: float,
    cfg: PipelineConfig,
    tree: StreamTree,
) -> PipelineResult:
    """Event enumeration -> noisy concept learning -> separation -> selection.

    The candidate list has one entry per (event, grid pair, side-0 spec,
    side-1 spec) plus one per direct-path spec; at least one entry is
    accurate with high probability whether or not the target distributions
    admit a distinguishing event.
    """
    budget = DrawBudget(cfg.draw_budget)
    concepts = enumerate_concepts(target.context_dist.n, cfg.max_conjunction)
    eclass = enumerate_event_class(shape, gamma)
    xi = cfg.xi if cfg.xi is not None else min(max(eclass.xi_bound, 1e-6), 1.0)
    m_cap = shape.budget().m_cap
    epsilon_cn = (
        cfg.epsilon_cn
        if cfg.epsilon_cn is not None
        else separate_error_threshold(epsilon, m_cap, cfg.m_p)
    )
    event_results = _collect_event_stage(
        target, eclass.events, [xi] * len(eclass.events), epsilon_cn, delta,
        concepts, cfg, tree, budget,
    )
    unique_hyps = _dedup_hypotheses(event_results)
    sep_by_h = _separate_stage(
        target, unique_hyps, epsilon, delta, shape, cfg, tree, budget
    )
    candidates: list[CandidateModel] = []
    for ei, res in enumerate(event_results):
        for pi, h in enumerate(res.hypotheses):
            sr = sep_by_h[h]
            n1 = len(sr.specs1)
            for i in range(len(sr.specs0)):
                for j in range(n1):
                    candidates.append(
                        CandidateModel(
                            model=sr.models[i * n1 + j],
                            provenance=PROV_FORWARD_EVENT,
                            source=(ei, pi, i, j),
                        )
                    )
    direct_rng = tree.child(STAGE_DIRECT).generator()
    direct_specs = direct_unhealthy_learn(
        target, epsilon, delta, shape, direct_rng, m_p=cfg.m_p, budget=budget
    )
    h0 = concepts[0]
    for ri, spec in enumerate(direct_specs):
        candidates.append(
            CandidateModel(
                model=HypothesisModel(hypothesis=h0, q0=spec, q1=spec),
                provenance=PROV_FORWARD_DIRECT,
                source=(ri,),
            )
        )
    diagnostics = {
        "n_events": len(eclass.events),
        "n_grid_pairs": len(event_results[0].grid.pairs) if event_results else 0,
        "skip_counts": [res.skip_count for res in event_results],
        "n_unique_hypotheses": len(unique_hyps),
        "xi": xi,
        "epsilon_cn": epsilon_cn,
        "n_direct": len(direct_specs),
    }
    return _finish(
        target, shape, candidates, epsilon, delta, cfg, tree, budget, diagnostics
    )


def reverse_candidate_events(
    fit, gamma: float, alpha: float, m_cap: float
) -> list[tuple[Event, str, int]]:
    """Likelihood-ratio events from a mixture fit, both component orderings.

    Each ordering contributes the approximation-robust construction (when its
    threshold is positive at the assumed accuracy alpha) and the pragmatic
    fallback at half the fitted divergence.
    """
    ordered = ((fit.comp0, fit.comp1, 0), (fit.comp1, fit.comp0, 1))
    out: list[tuple[Event, str, int]] = []
    for a, b, order in ordered:
        exact = event_from_approximations(a, b, gamma, alpha, m_cap)
        if exact is not None:
            out.append((exact, "robust", order))
        kl_fit = kl_divergence(a, b)
        if kl_fit > 0.0:
            out.append((likelihood_ratio_event(a, b, 0.5 * kl_fit), "fallback", order))
    return out


def reverse_learn(
    target: TargetModel,
    shape: FamilyShape,
    epsilon: float,
    delta: float,
    gamma: float,
    cfg: PipelineConfig,
    tree: StreamTree,
) -> PipelineResult:
    """Mixture fit -> constructed events -> noisy concept learning -> selection.

    Unhealthy fits skip the event stage entirely; the direct path always
    contributes candidates, so the selection never sees an empty list.
    """
    budget = DrawBudget(cfg.draw_budget)
    concepts = enumerate_concepts(target.context_dist.n, cfg.max_conjunction)
    budget.spend(cfg.m_mix)
    mix_rng = tree.child(STAGE_MIX).generator()
    _, ys = gen_sample_arrays(target, cfg.m_mix, mix_rng)
    fit = em_fit_2mixture(ys, shape, cfg.restarts, mix_rng)
    eta = cfg.eta if cfg.eta is not None else gamma
    health = health_check(fit, eta)
    m_cap = shape.budget().m_cap
    candidates: list[CandidateModel] = []
    event_records: list[dict] = []
    if health.healthy:
        epsilon_cn = (
            cfg.epsilon_cn
            if cfg.epsilon_cn is not None
            else separate_error_threshold(epsilon, m_cap, cfg.m_p)
        )
        usable: list[tuple[Event, float]] = []
        for ev, kind, order in reverse_candidate_events(
            fit, gamma, cfg.alpha_mix, m_cap
        ):
            try:
                sep_fit = abs(
                    event_probability(fit.comp0, ev) - event_probability(fit.comp1, ev)
                )
            except ExactComputationError:
                mc_rng = tree.child(STAGE_MIX, 1 + len(event_records)).generator()
                p0, _ = event_probability(fit.comp0, ev, "montecarlo", mc_rng)
                q0, _ = event_probability(fit.comp1, ev, "montecarlo", mc_rng)
                sep_fit = abs(p0 - q0)
            used = sep_fit >= cfg.xi_floor
            event_records.append(
                {"kind": kind, "order": order, "fitted_separation": sep_fit, "used": used}
            )
            if used:
                xi_e = cfg.xi if cfg.xi is not None else min(cfg.xi_safety * sep_fit, 1.0)
                usable.append((ev, max(min(xi_e, 1.0), cfg.xi_floor)))
        event_results = _collect_event_stage(
            target,
            tuple(ev for ev, _ in usable),
            [x for _, x in usable],
            epsilon_cn,
            delta,
            concepts,
            cfg,
            tree,
            budget,
        )
        unique_hyps = _dedup_hypotheses(event_results)
        sep_by_h = _separate_stage(
            target, unique_hyps, epsilon, delta, shape, cfg, tree, budget
        )
        for ei, res in enumerate(event_results):
            for pi, h in enumerate(res.hypotheses):
                sr = sep_by_h[h]
                n1 = len(sr.specs1)
                for i in range(len(sr.specs0)):
                    for j in range(n1):
                        candidates.append(
                            CandidateModel(
                                model=sr.models[i * n1 + j],
                                provenance=PROV_REVERSE_MIXTURE,
                                source=(ei, pi, i, j),
                            )
                        )
    direct_rng = tree.child(STAGE_DIRECT).generator()
    direct_specs = direct_unhealthy_learn(
        target, epsilon, delta, shape, direct_rng, m_p=cfg.m_p, budget=budget
    )
    h0 = concepts[0]
    for ri, spec in enumerate(direct_specs):
        candidates.append(
            CandidateModel(
                model=HypothesisModel(hypothesis=h0, q0=spec, q1=spec),
                provenance=PROV_REVERSE_DIRECT,
                source=(ri,),
            )
        )
    diagnostics = {
        "mixture_fit": fit,
        "health": health,
        "reverse_events": event_records,
        "n_direct": len(direct_specs),
    }
    return _finish(
        target, shape, candidates, epsilon, delta, cfg, tree, budget, diagnostics
    )


def direct_learn(
    target: TargetModel,
    shape: FamilyShape,
    epsilon: float,
    delta: float,
    cfg: PipelineConfig,
    tree: StreamTree,
) -> PipelineResult:
    """Direct path only: context-free fits of the outcome stream, then selection."""
    budget = DrawBudget(cfg.draw_budget)
    concepts = enumerate_concepts(target.context_dist.n, cfg.max_conjunction)
    direct_rng = tree.child(STAGE_DIRECT).generator()
    direct_specs = direct_unhealthy_learn(
        target, epsilon, delta, shape, direct_rng, m_p=cfg.m_p, budget=budget
    )
    h0 = concepts[0]
    candidates = [
        CandidateModel(
            model=HypothesisModel(hypothesis=h0, q0=spec, q1=spec),
            provenance=PROV_FORWARD_DIRECT,
            source=(ri,),
        )
        for ri, spec in enumerate(direct_specs)
    ]
    return _finish(
        target, shape, candidates, epsilon, delta, cfg, tree, budget,
        {"n_direct": len(direct_specs)},
    )


def gamma_dispatch(
    target: TargetModel, gamma: float, eta_direct: float
) -> dict:
    """Which pipeline branch covers the scenario at the given thresholds.

    The event branch applies when the directed component divergence reaches
    gamma; the direct branch when the true mixture is unhealthy at
    eta_direct. With gamma = eta_direct = 1/g the two cases are exhaustive.
    """
    max_kl = max(
        kl_divergence(target.p0, target.p1), kl_divergence(target.p1, target.p0)
    )
    w1 = concept_probability(target.concept, target.context_dist)
    min_w = min(w1, 1.0 - w1)
    event_branch = max_kl >= gamma
    direct_branch = (min_w < eta_direct) or (max_kl < eta_direct)
    return {
        "max_kl": max_kl,
        "min_weight": min_w,
        "event_branch": event_branch,
        "direct_branch": direct_branch,
        "covered": bool(event_branch or direct_branch),
    }
