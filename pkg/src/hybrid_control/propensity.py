"""Logistic model for P(Z=1 | X) and the odds weights it implies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LOGIT, ObservationTable
from .errors import DegenerateDesign
from .glm import GlmFit, fit_weighted_glm


@dataclass(frozen=True)
class PsFit:
    gamma: np.ndarray
    ps_design_cols: tuple[str, ...]
    fitted_odds: np.ndarray
    max_score_norm: float
    glm: GlmFit

    @property
    def max_odds(self) -> float:
        return float(self.fitted_odds.max())


def fit_propensity(table: ObservationTable, ps_design, columns=()) -> PsFit:
    """Logistic MLE of the cohort indicator on ``ps_design`` using every row.

    Treated RCT subjects are included: the cohort model is for ``Z`` and
    within the trial ``Z=1`` whatever the arm.
    """
    z = table.z
    if z.all() or not z.any():
        raise DegenerateDesign("propensity model needs both RCT and external rows")
    ps_design = np.asarray(ps_design, dtype=float)
    fit = fit_weighted_glm(ps_design, z, np.ones(table.n), LOGIT)
    odds = np.exp(ps_design @ fit.beta)
    return PsFit(gamma=fit.beta, ps_design_cols=tuple(columns), fitted_odds=odds,
                 max_score_norm=fit.max_score_norm, glm=fit)


def adjusted_weight(ps: PsFit, table: ObservationTable, w: float) -> float:
    """Rescale ``w`` so the odds-weighted external arm keeps ``w`` times its size."""
    ext = table.z == 0
    if not ext.any():
        raise DegenerateDesign("no external rows")
    if not 0 <= w <= 1:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    return float(w * ext.sum() / ps.fitted_odds[ext].sum())


def odds_weights(ps: PsFit, table: ObservationTable, w: float) -> np.ndarray:
    """Per-row ``{w_dagger * odds}^(1 - z)``: 1 for RCT rows."""
    w_dag = adjusted_weight(ps, table, w)
    return np.where(table.z == 1, 1.0, w_dag * ps.fitted_odds)
