"""Experiment orchestration and CSV report emission.

Each trial derives its own stream tree from (master seed, trial index), so
reports are byte-identical across runs and worker counts. Timing is off by
default (the runtime_ms column is zero) to keep the determinism contract;
pass timing=True or --timing for wall-clock values.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..distributions import kl_divergence
from ..model import classification_error, model_error
from ..reductions import PipelineResult, direct_learn, forward_learn, reverse_learn
from ..rng import StreamTree
from .config import ScenarioSpec

REPORT_SCHEMA = "pwdlab.report/1"
REPORT_COLUMNS = (
    "scenario",
    "trial",
    "seed",
    "pipeline",
    "err_T",
    "err_h",
    "kl0",
    "kl1",
    "chosen_provenance",
    "draws_used",
    "runtime_ms",
)

WORKERS_ENV_VAR = "PWDLAB_WORKERS"


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    trial: int
    seed: int
    pipeline: str
    err_T: float
    err_h: float
    kl0: float
    kl1: float
    chosen_provenance: str
    draws_used: int
    runtime_ms: int


def run_trial(scenario: ScenarioSpec, trial: int, timing: bool = False) -> ReportRow:
    """Run one seeded trial of the scenario's pipeline and score it exactly."""
    tree = StreamTree(scenario.seed).child(trial)
    target = scenario.target()
    shape = scenario.shape()
    t0 = time.perf_counter()
    if scenario.pipeline == "forward":
        result: PipelineResult = forward_learn(
            target, shape, scenario.epsilon, scenario.delta, scenario.gamma,
            scenario.params, tree,
        )
    elif scenario.pipeline == "reverse":
        result = reverse_learn(
            target, shape, scenario.epsilon, scenario.delta, scenario.gamma,
            scenario.params, tree,
        )
    else:
        result = direct_learn(
            target, shape, scenario.epsilon, scenario.delta, scenario.params, tree
        )
    elapsed_ms = int(round((time.perf_counter() - t0) * 1000.0)) if timing else 0
    chosen = result.chosen
    return ReportRow(
        scenario=scenario.name,
        trial=trial,
        seed=scenario.seed,
        pipeline=scenario.pipeline,
        err_T=model_error(target, chosen),
        err_h=classification_error(target.concept, chosen.hypothesis, target.context_dist),
        kl0=kl_divergence(target.p0, chosen.q0),
        kl1=kl_divergence(target.p1, chosen.q1),
        chosen_provenance=result.candidates[result.report.chosen_index].provenance,
        draws_used=result.draws_used,
        runtime_ms=elapsed_ms,
    )


def _worker(args) -> ReportRow:
    scenario_doc, trial, timing = args
    from .config import scenario_from_dict

    return run_trial(scenario_from_dict(scenario_doc), trial, timing)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1").strip()
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}")
    return max(1, n)


def run_experiment(
    scenario: ScenarioSpec, timing: bool = False, workers: int | None = None
) -> list[ReportRow]:
    """Run all trials; rows come back in trial order regardless of workers."""
    n_workers = worker_count() if workers is None else max(1, workers)
    trials = range(scenario.trials)
    if n_workers == 1 or scenario.trials == 1:
        return [run_trial(scenario, t, timing) for t in trials]
    from .config import scenario_to_dict

    doc = scenario_to_dict(scenario)
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        rows = list(pool.map(_worker, [(doc, t, timing) for t in trials]))
    return rows


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv_text(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {REPORT_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_format_value(getattr(row, c)) for c in REPORT_COLUMNS])
    return buf.getvalue()


def write_report_csv(rows: list[ReportRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_csv_text(rows))


def success_fraction(rows: list[ReportRow], max_err: float) -> float:
    if not rows:
        return 0.0
    return sum(1 for r in rows if r.err_T <= max_err) / len(rows)
