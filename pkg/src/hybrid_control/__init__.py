"""Estimators for randomized trials whose control arm is augmented with external controls."""

from .core import (
    DIFFERENCE,
    IDENTITY,
    LOG,
    LOG_ODDS_RATIO,
    LOG_RATIO,
    LOGIT,
    DesignInfo,
    EffectScale,
    LinkFamily,
    ObservationTable,
    effect_scale,
    link_family,
    validate_table,
)
from .estimators import METHODS, ModelSpec, PointEstimates, estimate, estimate_delta
from .glm import GlmFit, fit_weighted_glm, predict_mean
from .inference import (
    VarianceReport,
    analytic_variance,
    bootstrap_se,
    bootstrap_variance,
    stacked_sandwich,
    wald_ci,
)
from .propensity import PsFit, adjusted_weight, fit_propensity
from .simulation import Scenario, generate_dataset, run_monte_carlo, true_values

__version__ = "0.1.0"
