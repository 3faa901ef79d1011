"""Point estimators of the control mean, treated mean and treatment effect.

Six control-mean methods are provided: RCT-only, unadjusted downweighting,
propensity-odds weighting, augmentation, G-computation and weighted
regression. The treated mean is either the raw arm mean or its augmented
version; external rows never enter it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import EffectScale, ObservationTable, effect_scale, link_family
from .errors import DegenerateDesign, NoConvergence
from .glm import GlmFit, fit_weighted_glm, predict_mean
from .propensity import PsFit, fit_propensity, odds_weights

METHODS = ("rct_only", "unadjusted", "ps_weighting", "augmentation", "g_computation",
           "weighted_regression")
OR_METHODS = ("augmentation", "g_computation", "weighted_regression")
PS_METHODS = ("ps_weighting", "weighted_regression")


def _check_w(w):
    if not 0 <= w <= 1:
        raise ValueError(f"w must lie in [0, 1], got {w}")


def _weighted_mean(y, wt, what):
    total = wt.sum()
    if total <= 0:
        raise DegenerateDesign(f"no {what}")
    return float(np.dot(wt, y) / total)


def control_weights(table: ObservationTable, w: float) -> np.ndarray:
    """``(1 - a) * w^(1 - z)``."""
    _check_w(w)
    return (1.0 - table.a) * np.where(table.z == 1, 1.0, w)


def _require(fit: GlmFit):
    if not fit.converged:
        raise NoConvergence(f"working model stopped at score norm {fit.max_score_norm:.3g}")
    return fit


def mu0_rct_only(table: ObservationTable) -> float:
    return _weighted_mean(table.y, table.internal_control.astype(float), "internal controls")


def mu0_unadjusted(table: ObservationTable, w: float) -> float:
    return _weighted_mean(table.y, control_weights(table, w), "control subjects")


def mu0_ps_weighting(table: ObservationTable, ps: PsFit, w: float) -> float:
    _check_w(w)
    wt = (1.0 - table.a) * odds_weights(ps, table, w)
    return _weighted_mean(table.y, wt, "control subjects")


def fit_control_model(table, w, or_design, link="identity") -> GlmFit:
    """Working control-outcome model fitted on all controls with weight ``w`` on external rows."""
    return _require(fit_weighted_glm(or_design, table.y, control_weights(table, w), link))


def _rct_mean(table, values):
    z = table.z
    return float(np.dot(z, values) / z.sum())


def mu0_augmentation(table, w, or_design, link="identity", fit=None):
    """Augmented control mean; returns ``(estimate, fit)``.

    Internal-control mean, minus the fitted model averaged over internal
    controls, plus the fitted model averaged over the whole trial.
    """
    fit = fit if fit is not None else fit_control_model(table, w, or_design, link)
    m0 = predict_mean(fit, or_design)
    ic = table.internal_control
    if not ic.any():
        raise DegenerateDesign("no internal controls")
    est = table.y[ic].mean() - m0[ic].mean() + _rct_mean(table, m0)
    return float(est), fit


def mu0_gcomputation(table, w, or_design, link="identity", fit=None):
    """Trial-average of the fitted control model; returns ``(estimate, fit)``."""
    fit = fit if fit is not None else fit_control_model(table, w, or_design, link)
    return _rct_mean(table, predict_mean(fit, or_design)), fit


def mu0_weighted_regression(table, w, or_design, ps_design=None, link="identity", ps=None,
                            ps_columns=()):
    """Propensity-odds-weighted regression estimate; returns ``(estimate, fit, ps)``.

    External controls enter the outcome model with weight ``w_dagger`` times
    their fitted propensity odds.
    """
    _check_w(w)
    if ps is None:
        ps = fit_propensity(table, ps_design, ps_columns)
    wt = (1.0 - table.a) * odds_weights(ps, table, w)
    fit = _require(fit_weighted_glm(or_design, table.y, wt, link))
    return _rct_mean(table, predict_mean(fit, or_design)), fit, ps


def mu1_simple(table: ObservationTable) -> float:
    return _weighted_mean(table.y, table.treated.astype(float), "treated subjects")


def fit_treated_model(table, or_design, link="identity") -> GlmFit:
    return _require(fit_weighted_glm(or_design, table.y, table.treated.astype(float), link))


def mu1_augmented(table, or_design, link="identity", fit=None):
    """Augmented treated mean; returns ``(estimate, fit)``."""
    fit = fit if fit is not None else fit_treated_model(table, or_design, link)
    m1 = predict_mean(fit, or_design)
    t = table.treated
    est = table.y[t].mean() - m1[t].mean() + _rct_mean(table, m1)
    return float(est), fit


def mu1_gcomputation(table, or_design, link="identity", fit=None) -> float:
    fit = fit if fit is not None else fit_treated_model(table, or_design, link)
    return _rct_mean(table, predict_mean(fit, or_design))


def estimate_delta(mu1: float, mu0: float, scale="difference") -> float:
    scale = effect_scale(scale)
    return scale(mu1) - scale(mu0)


@dataclass(frozen=True)
class ModelSpec:
    """Column choices and links for the working models of one analysis."""

    or_columns: tuple[str, ...] = ()
    or_columns_treated: Optional[tuple[str, ...]] = None
    ps_columns: tuple[str, ...] = ()
    link: str = "identity"
    link_treated: Optional[str] = None

    @property
    def treated_columns(self):
        return self.or_columns if self.or_columns_treated is None else self.or_columns_treated

    @property
    def treated_link(self):
        return self.link if self.link_treated is None else self.link_treated


@dataclass(frozen=True)
class PointEstimates:
    method: str
    w: float
    mu1: float
    mu0: float
    delta: float
    scale: EffectScale
    fits: dict = field(default_factory=dict, repr=False)


def estimate(table: ObservationTable, method: str, w: float = 0.5, spec: ModelSpec = ModelSpec(),
             scale="difference") -> PointEstimates:
    """Estimate ``(mu1, mu0, delta)`` with one of the six methods.

    The three outcome-regression methods pair their control mean with the
    augmented treated mean; the other three use the raw treated-arm mean.
    The fitted models are returned in ``fits`` for variance estimation.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    scale = effect_scale(scale)
    fits = {}
    if method in OR_METHODS:
        x1 = table.design(spec.treated_columns)
        mu1, fits["m1"] = mu1_augmented(table, x1, link_family(spec.treated_link))
    else:
        mu1 = mu1_simple(table)

    if method == "rct_only":
        mu0 = mu0_rct_only(table)
    elif method == "unadjusted":
        mu0 = mu0_unadjusted(table, w)
    elif method == "ps_weighting":
        fits["ps"] = fit_propensity(table, table.design(spec.ps_columns), spec.ps_columns)
        mu0 = mu0_ps_weighting(table, fits["ps"], w)
    else:
        x0 = table.design(spec.or_columns)
        link = link_family(spec.link)
        if method == "augmentation":
            mu0, fits["m0"] = mu0_augmentation(table, w, x0, link)
        elif method == "g_computation":
            mu0, fits["m0"] = mu0_gcomputation(table, w, x0, link)
        else:
            mu0, fits["m0"], fits["ps"] = mu0_weighted_regression(
                table, w, x0, table.design(spec.ps_columns), link, ps_columns=spec.ps_columns)
    return PointEstimates(method, w, mu1, mu0, estimate_delta(mu1, mu0, scale), scale, fits)
