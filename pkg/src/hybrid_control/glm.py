"""Weighted generalized linear working models.

Solves ``sum_i w_i (y_i - h(x_i'b)) x_i = 0`` by damped Newton iteration.
For the logit link with unit weights this is the logistic MLE; with other
weights or links it is just an estimating equation, so the line search
works on the score norm rather than a likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .core import LinkFamily, link_family
from .errors import DimensionMismatch, DomainError, NoConvergence, Separation, SingularDesign

TOL = 1e-10
MAX_ITER = 100
PIVOT_TOL = 1e-12
DIVERGENCE_NORM = 1e3
# |logit| beyond this means fitted probabilities are numerically 0 or 1
SEPARATION_ETA = 30.0


@dataclass(frozen=True)
class GlmFit:
    beta: np.ndarray
    family: LinkFamily
    row_weights: np.ndarray
    converged: bool
    iterations: int
    max_score_norm: float

    def predict(self, design: np.ndarray) -> np.ndarray:
        return predict_mean(self, design)


def score(beta, design, response, weights, family) -> np.ndarray:
    """Estimating function summed over rows."""
    eta = design @ beta
    return design.T @ (weights * (response - family.h(eta)))


def score_jacobian(beta, design, weights, family) -> np.ndarray:
    """Derivative of :func:`score` with respect to ``beta``."""
    eta = design @ beta
    return -(design * (weights * family.h_dot(eta))[:, None]).T @ design


def check_rank(design: np.ndarray, weights: np.ndarray) -> None:
    """Raise SingularDesign if the positively weighted rows are rank deficient."""
    keep = weights > 0
    if not keep.any():
        raise SingularDesign("no positively weighted rows")
    sub = design[keep] * np.sqrt(weights[keep])[:, None]
    if sub.shape[0] < sub.shape[1]:
        raise SingularDesign(f"{sub.shape[0]} weighted rows for {sub.shape[1]} coefficients")
    r = qr(sub, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag[0] == 0 or diag[-1] <= PIVOT_TOL * diag[0]:
        raise SingularDesign("design matrix is rank deficient on weighted rows")


def _initial_beta(design, response, weights, family):
    beta = np.zeros(design.shape[1])
    mean = np.sum(weights * response) / np.sum(weights)
    if family.kind == "identity":
        beta[0] = mean
    elif family.kind == "log" and mean > 0:
        beta[0] = np.log(mean)
    return beta


def fit_weighted_glm(design, response, weights, family="identity", *, tol=TOL,
                     max_iter=MAX_ITER, beta0=None) -> GlmFit:
    """Fit a GLM working model by solving its weighted estimating equation.

    ``design`` carries the intercept column. Rows with zero weight are
    dropped before fitting, so they have no influence at all. Convergence is
    declared when every score component is at most ``tol * n`` in absolute
    value.
    """
    family = link_family(family)
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = design.shape[0]
    if response.shape != (n,) or weights.shape != (n,):
        raise DimensionMismatch("design, response and weights must have matching rows")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and nonnegative")
    check_rank(design, weights)

    keep = weights > 0
    X, y, wt = design[keep], response[keep], weights[keep]
    limit = tol * n

    beta = _initial_beta(X, y, wt, family) if beta0 is None else np.array(beta0, dtype=float)
    u = score(beta, X, y, wt, family)
    norm = np.max(np.abs(u))
    if not np.isfinite(norm):
        raise DomainError(f"{family.kind} link gives non-finite means at the starting values")
    it = 0
    while norm > limit:
        if it >= max_iter:
            raise NoConvergence(f"{family.kind} fit did not converge in {max_iter} iterations "
                                f"(score norm {norm:.3g})")
        it += 1
        jac = score_jacobian(beta, X, wt, family)
        try:
            step = np.linalg.solve(jac, -u)
        except np.linalg.LinAlgError:
            raise SingularDesign("singular Jacobian during Newton iteration") from None
        if not np.all(np.isfinite(step)):
            raise SingularDesign("singular Jacobian during Newton iteration")
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            with np.errstate(over="ignore", invalid="ignore"):
                u_new = score(cand, X, y, wt, family)
            new_norm = np.max(np.abs(u_new))
            if np.isfinite(new_norm) and new_norm < norm:
                break
            t *= 0.5
        else:
            if norm <= 1e3 * limit:
                # already at the floating-point floor of the score
                break
            if family.kind == "log":
                raise DomainError("log link: step halving could not keep fitted means finite")
            raise NoConvergence(f"line search failed (score norm {norm:.3g})")
        beta, u, norm = cand, u_new, new_norm
        if family.kind == "logit" and np.linalg.norm(beta) > DIVERGENCE_NORM and norm > limit:
            raise Separation("logistic coefficients diverging; outcome classes appear separated")

    if family.kind == "logit" and np.max(np.abs(X @ beta)) > SEPARATION_ETA:
        raise Separation("fitted probabilities of 0 or 1; outcome classes appear separated")
    return GlmFit(beta=beta, family=family, row_weights=weights, converged=bool(norm <= limit),
                  iterations=it, max_score_norm=float(norm))


def predict_mean(fit: GlmFit, design) -> np.ndarray:
    design = np.asarray(design, dtype=float)
    if design.ndim != 2 or design.shape[1] != fit.beta.size:
        raise DimensionMismatch(f"design has {design.shape[-1]} columns, "
                                f"model has {fit.beta.size} coefficients")
    return fit.family.h(design @ fit.beta)
