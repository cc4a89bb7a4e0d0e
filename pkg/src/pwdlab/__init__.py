"""pwdlab: a simulation and learning laboratory for models that predict an
outcome distribution selected by a hidden binary concept.

A hidden concept c(x) over contexts chooses which of two outcome
distributions generates each observation; learners must recover both the
concept and the distributions well enough that the expected conditional
KL divergence (in bits) of their predictions is small. The package ships
the generative oracle, distribution families with bounded evaluators,
distinguishing-event machinery, noise-injected concept learning, robust
list-output distribution learning, EM mixture fitting, the forward and
reverse end-to-end pipelines with maximum-likelihood selection, and a
verification harness for every identity and bound used along the way.
"""

from .budget import DrawBudget
from .cccn import (
    GuessGrid,
    LabParams,
    erm_cccn_learn,
    guess_grid,
    lab_label,
    lab_parameters,
    learn_with_event,
    noise_rates,
)
from .distlearn import (
    RobustnessBudget,
    direct_unhealthy_learn,
    robust_learn_list,
    separate_and_learn,
)
from .distributions import (
    BoundednessBudget,
    DistributionSpec,
    FamilyShape,
    bary_product,
    bernoulli_product,
    entropy,
    fit_single,
    kl_divergence,
    log_density,
    sample,
    spherical_gaussian,
)
from .events import (
    Event,
    EventClass,
    enumerate_event_class,
    event_probability,
    likelihood_ratio_event,
)
from .mixture import HealthReport, MixtureFit, em_fit_2mixture, health_check
from .model import (
    Concept,
    ContextDistribution,
    HypothesisModel,
    LabeledPair,
    TargetModel,
    empirical_log_loss,
    enumerate_concepts,
    gen_sample,
    model_error,
)
from .reductions import (
    CandidateModelList,
    MLSelectionReport,
    PipelineConfig,
    forward_learn,
    ml_select,
    reverse_learn,
)
from .rng import StreamTree, derive_rng

__version__ = "0.1.0"

__all__ = [
    "BoundednessBudget",
    "CandidateModelList",
    "Concept",
    "ContextDistribution",
    "DistributionSpec",
    "DrawBudget",
    "Event",
    "EventClass",
    "FamilyShape",
    "GuessGrid",
    "HealthReport",
    "HypothesisModel",
    "LabParams",
    "LabeledPair",
    "MLSelectionReport",
    "MixtureFit",
    "PipelineConfig",
    "RobustnessBudget",
    "StreamTree",
    "TargetModel",
    "bary_product",
    "bernoulli_product",
    "derive_rng",
    "direct_unhealthy_learn",
    "em_fit_2mixture",
    "empirical_log_loss",
    "entropy",
    "enumerate_concepts",
    "enumerate_event_class",
    "erm_cccn_learn",
    "event_probability",
    "fit_single",
    "forward_learn",
    "gen_sample",
    "guess_grid",
    "health_check",
    "kl_divergence",
    "lab_label",
    "lab_parameters",
    "learn_with_event",
    "likelihood_ratio_event",
    "log_density",
    "ml_select",
    "model_error",
    "noise_rates",
    "reverse_learn",
    "robust_learn_list",
    "sample",
    "separate_and_learn",
    "spherical_gaussian",
]
