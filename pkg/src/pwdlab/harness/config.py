"""Scenario configuration: a JSON document describing one experiment.

Serialization is self-describing: every default is written out explicitly,
so a stored config plus its master seed fully determines the report.
Parsing is strict and errors name the offending field path.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..distributions import (
    BARY_PRODUCT,
    BERNOULLI_PRODUCT,
    SPHERICAL_GAUSSIAN,
    DistributionSpec,
    FamilyShape,
    bary_product,
    bernoulli_product,
    spherical_gaussian,
)
from ..errors import ConfigError
from ..model import Concept, ContextDistribution, TargetModel
from ..reductions import PipelineConfig

PIPELINES = ("forward", "reverse", "direct")


@dataclass(frozen=True)
class ScenarioSpec:
    """One named, fully reproducible experiment."""

    name: str
    pipeline: str
    n: int
    k: int
    family: str
    concept: Concept
    context: ContextDistribution
    p0: DistributionSpec
    p1: DistributionSpec
    epsilon: float
    delta: float
    gamma: float
    trials: int
    seed: int
    params: PipelineConfig
    b: int | None = None
    sigma: float | None = None
    lam: float | None = None
    m_cap: float | None = None
    mean_box: tuple[float, float] = (0.0, 1.0)
    accept_max_err: float | None = None
    accept_min_success: float = 0.8

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError("pipeline", f"must be one of {PIPELINES}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not (0.0 < self.epsilon):
            raise ConfigError("epsilon", "must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta", "must lie in (0, 1)")
        if not (0.0 < self.gamma):
            raise ConfigError("gamma", "must be positive")
        if self.context.n != self.n:
            raise ConfigError("context.biases", f"length {self.context.n} != n={self.n}")
        if self.concept.variables and max(self.concept.variables) > self.n:
            raise ConfigError("concept.variables", f"index exceeds n={self.n}")
        if self.p0.k != self.k or self.p1.k != self.k:
            raise ConfigError("p0/p1", f"distribution length must equal k={self.k}")

    def shape(self) -> FamilyShape:
        return FamilyShape(
            family=self.family,
            k=self.k,
            b=self.b,
            sigma=self.sigma,
            lam=self.lam,
            mean_low=self.mean_box[0],
            mean_high=self.mean_box[1],
            m_cap=self.m_cap,
        )

    def target(self) -> TargetModel:
        return TargetModel(
            concept=self.concept, p0=self.p0, p1=self.p1, context_dist=self.context
        )

    @property
    def accept_threshold(self) -> float:
        return self.accept_max_err if self.accept_max_err is not None else self.epsilon


# -- parsing helpers ----------------------------------------------------------


def _req(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return d[key]


def _parse_concept(d: dict, path: str) -> Concept:
    try:
        return Concept(
            kind=_req(d, "kind", path), variables=tuple(d.get("variables", ()))
        )
    except ValueError as e:
        raise ConfigError(path, str(e)) from e


def _parse_context(d: dict, n: int, path: str) -> ContextDistribution:
    kind = _req(d, "kind", path)
    try:
        if kind == "uniform":
            return ContextDistribution.uniform(n)
        return ContextDistribution.product(d.get("biases", [0.5] * n))
    except ValueError as e:
        raise ConfigError(f"{path}.biases", str(e)) from e


def _broadcast(value, k: int, field: str):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(k, float(arr))
    if arr.shape[0] != k:
        raise ConfigError(field, f"expected length {k}, got {arr.shape[0]}")
    return arr


def _parse_dist(d: dict, spec: "dict", path: str) -> DistributionSpec:
    family = spec["family"]
    k = spec["k"]
    try:
        if family == BERNOULLI_PRODUCT:
            return bernoulli_product(
                _broadcast(_req(d, "biases", path), k, f"{path}.biases"),
                lam=spec["lam"],
            )
        if family == BARY_PRODUCT:
            table = np.asarray(_req(d, "table", path), dtype=np.float64)
            return bary_product(table, lam=spec["lam"])
        return spherical_gaussian(
            _broadcast(_req(d, "mean", path), k, f"{path}.mean"),
            sigma=spec["sigma"],
            mean_box=spec["mean_box"],
            m_cap=spec["m_cap"],
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(path, str(e)) from e


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    """Parse and validate a config document."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    name = _req(doc, "name", "")
    family = _req(doc, "family", "")
    if family not in (BERNOULLI_PRODUCT, BARY_PRODUCT, SPHERICAL_GAUSSIAN):
        raise ConfigError("family", f"unknown family {family!r}")
    n = int(_req(doc, "n", ""))
    k = int(_req(doc, "k", ""))
    lam = doc.get("lam")
    sigma = doc.get("sigma")
    b = doc.get("b")
    mean_box = tuple(doc.get("mean_box", (0.0, 1.0)))
    m_cap = doc.get("m_cap")
    if family != SPHERICAL_GAUSSIAN and lam is None:
        lam = 1e-3
    dist_env = {
        "family": family, "k": k, "lam": lam, "sigma": sigma,
        "mean_box": mean_box, "m_cap": m_cap,
    }
    params_doc = doc.get("params", {})
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    for key in params_doc:
        if key not in known:
            raise ConfigError(f"params.{key}", "unknown pipeline parameter")
    try:
        params = PipelineConfig(**params_doc)
    except (TypeError, ValueError) as e:
        raise ConfigError("params", str(e)) from e
    spec = ScenarioSpec(
        name=str(name),
        pipeline=str(_req(doc, "pipeline", "")),
        n=n,
        k=k,
        family=family,
        concept=_parse_concept(_req(doc, "concept", ""), "concept"),
        context=_parse_context(_req(doc, "context", ""), n, "context"),
        p0=_parse_dist(_req(doc, "p0", ""), dist_env, "p0"),
        p1=_parse_dist(_req(doc, "p1", ""), dist_env, "p1"),
        epsilon=float(_req(doc, "epsilon", "")),
        delta=float(_req(doc, "delta", "")),
        gamma=float(_req(doc, "gamma", "")),
        trials=int(_req(doc, "trials", "")),
        seed=int(_req(doc, "seed", "")),
        params=params,
        b=b,
        sigma=sigma,
        lam=lam,
        m_cap=m_cap,
        mean_box=(float(mean_box[0]), float(mean_box[1])),
        accept_max_err=doc.get("accept_max_err"),
        accept_min_success=float(doc.get("accept_min_success", 0.8)),
    )
    return spec


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Serialize with every default made explicit."""
    if spec.family == BERNOULLI_PRODUCT:
        p0 = {"biases": spec.p0.biases.tolist()}
        p1 = {"biases": spec.p1.biases.tolist()}
    elif spec.family == BARY_PRODUCT:
        p0 = {"table": spec.p0.table.tolist()}
        p1 = {"table": spec.p1.table.tolist()}
    else:
        p0 = {"mean": spec.p0.mean.tolist()}
        p1 = {"mean": spec.p1.mean.tolist()}
    return {
        "name": spec.name,
        "pipeline": spec.pipeline,
        "n": spec.n,
        "k": spec.k,
        "family": spec.family,
        "b": spec.b,
        "sigma": spec.sigma,
        "lam": spec.lam,
        "m_cap": spec.m_cap,
        "mean_box": list(spec.mean_box),
        "concept": {"kind": spec.concept.kind, "variables": list(spec.concept.variables)},
        "context": {"kind": spec.context.kind, "biases": spec.context.biases.tolist()},
        "p0": p0,
        "p1": p1,
        "epsilon": spec.epsilon,
        "delta": spec.delta,
        "gamma": spec.gamma,
        "trials": spec.trials,
        "seed": spec.seed,
        "params": dataclasses.asdict(spec.params),
        "accept_max_err": spec.accept_max_err,
        "accept_min_success": spec.accept_min_success,
    }


def load_scenario(path: str | Path) -> ScenarioSpec:
    """Load a scenario config from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from e
    return scenario_from_dict(doc)


def save_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled_scenario_names() -> list[str]:
    root = resources.files("pwdlab.harness") / "scenarios"
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> ScenarioSpec:
    """Load one of the scenarios shipped with the package."""
    root = resources.files("pwdlab.harness") / "scenarios"
    path = root / f"{name}.json"
    if not path.is_file():
        raise ConfigError("name", f"no bundled scenario {name!r}; have {bundled_scenario_names()}")
    return scenario_from_dict(json.loads(path.read_text(encoding="utf-8")))
