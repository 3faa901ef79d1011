"""Standard errors and confidence intervals.

Three routes are available:

* the augmentation plug-in, which evaluates the influence expressions of the
  augmented means with empirical proportions and fitted models;
* stacked M-estimation sandwiches for G-computation and weighted regression,
  whose blocks are the working-model estimating equations themselves;
* a stratified nonparametric bootstrap for everything else.

All analytic routes produce per-row influence values; covariances are
``IF' IF / n^2`` so the effect-scale standard error follows by the delta
method from the joint covariance of the two means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit, ndtri

from .core import ObservationTable, effect_scale, link_family, validate_table
from .errors import EstimatorFailure, HybridControlError, SingularBread
from .estimators import ModelSpec, PointEstimates, control_weights
from .glm import GlmFit, predict_mean
from .propensity import PsFit, adjusted_weight, odds_weights


@dataclass
class InfluenceSpec:
    """Stacked estimating functions evaluated at an estimate.

    ``estimating_functions(theta)`` returns an ``n x k`` matrix whose rows are
    the per-observation estimating functions; ``jacobian(theta)`` returns the
    row-average of their derivatives (``k x k``). When ``jacobian`` is None a
    central-difference approximation is used.
    """

    estimating_functions: Callable[[np.ndarray], np.ndarray]
    theta_hat: np.ndarray
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    blocks: dict = field(default_factory=dict)

    def values(self, theta=None) -> np.ndarray:
        return self.estimating_functions(self.theta_hat if theta is None else theta)


def numerical_jacobian(spec: InfluenceSpec, theta=None, rel_step=1e-6) -> np.ndarray:
    theta = np.asarray(spec.theta_hat if theta is None else theta, dtype=float)
    k = theta.size
    jac = np.empty((k, k))
    for j in range(k):
        h = rel_step * max(1.0, abs(theta[j]))
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (spec.values(up).mean(axis=0) - spec.values(dn).mean(axis=0)) / (2 * h)
    return jac


def _bread(spec: InfluenceSpec, mode: str) -> np.ndarray:
    if mode == "numeric" or spec.jacobian is None:
        return -numerical_jacobian(spec)
    bread = -spec.jacobian(spec.theta_hat)
    if mode == "check":
        fd = -numerical_jacobian(spec)
        scale = np.max(np.abs(bread))
        err = np.max(np.abs(bread - fd)) / scale
        if err > 1e-5:
            raise AssertionError(f"analytic Jacobian disagrees with finite differences ({err:.2e})")
    return bread


def influence_values(spec: InfluenceSpec, mode: str = "analytic") -> np.ndarray:
    """Rows ``M^-1 phi_i`` where ``M`` is the bread matrix."""
    bread = _bread(spec, mode)
    phi = spec.values()
    try:
        return np.linalg.solve(bread, phi.T).T
    except np.linalg.LinAlgError:
        raise SingularBread("bread matrix is singular") from None


def stacked_sandwich(spec: InfluenceSpec, mode: str = "analytic") -> np.ndarray:
    """Covariance ``n^-1 M^-1 B M^-T`` of the stacked estimate.

    ``mode`` is ``"analytic"``, ``"numeric"`` (finite-difference bread) or
    ``"check"`` (analytic, verified against finite differences).
    """
    bread = _bread(spec, mode)
    if np.linalg.cond(bread) > 1e14:
        raise SingularBread("bread matrix is singular")
    phi = spec.values()
    n = phi.shape[0]
    meat = phi.T @ phi / n
    inv = np.linalg.inv(bread)
    cov = inv @ meat @ inv.T / n
    return (cov + cov.T) / 2


# --- influence expressions -------------------------------------------------

def augmented_influence_mu1(table, m1, mu1, info=None) -> np.ndarray:
    """``Z[A(Y-mu1) - (A-pi){m1(X) - mu1*}] / (tau pi)`` at plug-in values."""
    info = info or validate_table(table)
    z, a = table.z, table.a
    mu1_star = np.dot(z, m1) / z.sum()
    pi, tau = info.pi_hat, info.tau_hat
    return z * (a * (table.y - mu1) - (a - pi) * (m1 - mu1_star)) / (tau * pi)


def augmented_influence_mu0(table, m0, mu0, info=None) -> np.ndarray:
    """``Z[(1-A)(Y-mu0) + (A-pi){m0(X) - mu0*}] / (tau (1-pi))`` at plug-in values."""
    info = info or validate_table(table)
    z, a = table.z, table.a
    mu0_star = np.dot(z, m0) / z.sum()
    pi, tau = info.pi_hat, info.tau_hat
    return z * ((1 - a) * (table.y - mu0) + (a - pi) * (m0 - mu0_star)) / (tau * (1 - pi))


def gcomputation_spec(table, fit: GlmFit, or_design, w, mu0) -> InfluenceSpec:
    """Blocks (beta, mu0): the weighted working-model equation and the trial average."""
    return _outcome_mean_spec(table, fit, or_design, control_weights(table, w), mu0)


def _outcome_mean_spec(table, fit, or_design, omega, mu0) -> InfluenceSpec:
    X = np.asarray(or_design, dtype=float)
    fam = fit.family
    y, z = table.y, table.z
    p = X.shape[1]

    def ef(theta):
        beta, mu = theta[:p], theta[p]
        eta = X @ beta
        m = fam.h(eta)
        return np.column_stack([X * (omega * (y - m))[:, None], z * (m - mu)])

    def jac(theta):
        beta = theta[:p]
        hd = fam.h_dot(X @ beta)
        n = X.shape[0]
        out = np.zeros((p + 1, p + 1))
        out[:p, :p] = -(X * (omega * hd)[:, None]).T @ X / n
        out[p, :p] = (z * hd) @ X / n
        out[p, p] = -z.mean()
        return out

    return InfluenceSpec(ef, np.append(fit.beta, mu0), jac,
                         {"beta": slice(0, p), "mu0": slice(p, p + 1)})


def weighted_regression_spec(table, fit: GlmFit, ps: PsFit, or_design, ps_design, w,
                             mu0, propensity="stacked") -> InfluenceSpec:
    """Blocks (gamma, c, beta, mu0).

    ``c`` is the normalising constant solving
    ``sum (1-z)(w - c exp(s'gamma)) = 0``, i.e. the adjusted weight, so its
    sampling variability is carried into the outcome-model block.

    With ``propensity="fixed"`` the fitted odds weights are treated as known
    constants and only the (beta, mu0) blocks remain. That ignores the
    variability of the propensity fit.
    """
    if propensity == "fixed":
        omega = (1.0 - table.a) * odds_weights(ps, table, w)
        return _outcome_mean_spec(table, fit, or_design, omega, mu0)
    if propensity != "stacked":
        raise ValueError(f"propensity must be 'stacked' or 'fixed', got {propensity!r}")
    X = np.asarray(or_design, dtype=float)
    S = np.asarray(ps_design, dtype=float)
    fam = fit.family
    y, z, a = table.y, table.z, table.a
    ext = 1.0 - z
    ctl = 1.0 - a
    q, p = S.shape[1], X.shape[1]
    ic, ib, im = q, slice(q + 1, q + 1 + p), q + 1 + p

    def ef(theta):
        gamma, c, beta, mu = theta[:q], theta[ic], theta[ib], theta[im]
        lin = S @ gamma
        odds = np.exp(lin)
        omega = ctl * (z + ext * c * odds)
        m = fam.h(X @ beta)
        return np.column_stack([
            S * (z - expit(lin))[:, None],
            ext * (w - c * odds),
            X * (omega * (y - m))[:, None],
            z * (m - mu),
        ])

    def jac(theta):
        gamma, c, beta = theta[:q], theta[ic], theta[ib]
        n = X.shape[0]
        lin = S @ gamma
        pr = expit(lin)
        odds = np.exp(lin)
        eta = X @ beta
        m, hd = fam.h(eta), fam.h_dot(eta)
        resid = y - m
        omega = ctl * (z + ext * c * odds)
        k = q + p + 2
        out = np.zeros((k, k))
        out[:q, :q] = -(S * (pr * (1 - pr))[:, None]).T @ S
        out[ic, :q] = -(ext * c * odds) @ S
        out[ic, ic] = -(ext * odds).sum()
        r = ctl * ext * odds * resid
        out[ib, :q] = (X * (c * r)[:, None]).T @ S
        out[ib, ic] = r @ X
        out[ib, ib] = -(X * (omega * hd)[:, None]).T @ X
        out[im, ib] = (z * hd) @ X
        out[im, im] = -z.sum()
        return out / n

    c_hat = adjusted_weight(ps, table, w)
    theta = np.concatenate([ps.gamma, [c_hat], fit.beta, [mu0]])
    return InfluenceSpec(ef, theta, jac, {"gamma": slice(0, q), "c": slice(q, q + 1),
                                          "beta": ib, "mu0": slice(im, im + 1)})


def gcomputation_terms(table, fit: GlmFit, or_design, w, mu0):
    """The two summands ``Z{m0(X)-mu0}/tau`` and ``d(beta)' psi_beta(O)``, row by row.

    Computed directly from the working-model equation, independently of the
    stacked machinery; their sum is the G-computation influence function.
    """
    X = np.asarray(or_design, dtype=float)
    fam = fit.family
    z = table.z
    n = table.n
    tau = z.mean()
    eta = X @ fit.beta
    m, hd = fam.h(eta), fam.h_dot(eta)
    omega = control_weights(table, w)
    info_beta = (X * (omega * hd)[:, None]).T @ X / n
    psi = np.linalg.solve(info_beta, (X * (omega * (table.y - m))[:, None]).T).T
    d = (z * hd) @ X / z.sum()
    return z * (m - mu0) / tau, psi @ d


# --- reports ---------------------------------------------------------------

@dataclass(frozen=True)
class VarianceReport:
    method: str
    se_mu1: float
    se_mu0: float
    se_delta: float
    cov: np.ndarray
    influence: Optional[np.ndarray] = field(default=None, repr=False)
    source: str = "analytic"

    def se(self, parameter: str) -> float:
        return {"mu1": self.se_mu1, "mu0": self.se_mu0, "delta": self.se_delta}[parameter]


def delta_method_se(cov, mu1, mu0, scale) -> float:
    scale = effect_scale(scale)
    g1, g0 = scale.derivative(mu1), scale.derivative(mu0)
    var = g1 * g1 * cov[0, 0] - 2 * g1 * g0 * cov[0, 1] + g0 * g0 * cov[1, 1]
    return float(np.sqrt(max(var, 0.0)))


def _report(method, est: PointEstimates, if1, if0) -> VarianceReport:
    infl = np.column_stack([if1, if0])
    n = infl.shape[0]
    cov = infl.T @ infl / n**2
    cov = (cov + cov.T) / 2
    return VarianceReport(method, float(np.sqrt(cov[0, 0])), float(np.sqrt(cov[1, 1])),
                          delta_method_se(cov, est.mu1, est.mu0, est.scale), cov, infl)


def _mu1_influence(table, est, spec, info):
    if "m1" in est.fits:
        m1 = predict_mean(est.fits["m1"], table.design(spec.treated_columns))
    else:
        m1 = np.full(table.n, est.mu1)
    return augmented_influence_mu1(table, m1, est.mu1, info)


def variance_rct_only(table, est: PointEstimates) -> VarianceReport:
    info = validate_table(table)
    if1 = augmented_influence_mu1(table, np.full(table.n, est.mu1), est.mu1, info)
    if0 = augmented_influence_mu0(table, np.full(table.n, est.mu0), est.mu0, info)
    return _report("rct_only", est, if1, if0)


def variance_augmentation(table, est: PointEstimates, spec: ModelSpec) -> VarianceReport:
    info = validate_table(table)
    m0 = predict_mean(est.fits["m0"], table.design(spec.or_columns))
    if0 = augmented_influence_mu0(table, m0, est.mu0, info)
    return _report("augmentation", est, _mu1_influence(table, est, spec, info), if0)


def variance_gcomputation(table, est: PointEstimates, spec: ModelSpec,
                          mode="analytic") -> VarianceReport:
    info = validate_table(table)
    x0 = table.design(spec.or_columns)
    ispec = gcomputation_spec(table, est.fits["m0"], x0, est.w, est.mu0)
    if0 = influence_values(ispec, mode)[:, -1]
    return _report("g_computation", est, _mu1_influence(table, est, spec, info), if0)


def variance_weighted_regression(table, est: PointEstimates, spec: ModelSpec,
                                 mode="analytic", propensity="stacked") -> VarianceReport:
    info = validate_table(table)
    x0 = table.design(spec.or_columns)
    ispec = weighted_regression_spec(table, est.fits["m0"], est.fits["ps"], x0,
                                     table.design(spec.ps_columns), est.w, est.mu0, propensity)
    if0 = influence_values(ispec, mode)[:, -1]
    return _report("weighted_regression", est, _mu1_influence(table, est, spec, info), if0)


ANALYTIC = {
    "rct_only": lambda t, e, s: variance_rct_only(t, e),
    "augmentation": variance_augmentation,
    "g_computation": variance_gcomputation,
    "weighted_regression": variance_weighted_regression,
}


def analytic_variance(table, est: PointEstimates, spec: ModelSpec) -> VarianceReport:
    try:
        fn = ANALYTIC[est.method]
    except KeyError:
        raise ValueError(f"no analytic variance for {est.method!r}; use the bootstrap") from None
    return fn(table, est, spec)


# --- bootstrap -------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapResult:
    se: np.ndarray
    replicates: np.ndarray
    failures: int


def _strata(table: ObservationTable, stratified: bool):
    if not stratified:
        return [np.arange(table.n)]
    cells = []
    for z, a in ((0, 0), (1, 0), (1, 1)):
        idx = np.flatnonzero((table.z == z) & (table.a == a))
        if idx.size:
            cells.append(idx)
    return cells


def resample_indices(table, rng, stratified=True) -> np.ndarray:
    return np.concatenate([rng.choice(cell, size=cell.size, replace=True)
                           for cell in _strata(table, stratified)])


def bootstrap(table, estimator, B=1000, seed=0, stratified=True, max_retries=20) -> BootstrapResult:
    """Row-resampling bootstrap of ``estimator(table)`` (scalar or vector valued).

    Replicate ``b`` draws from its own stream keyed by ``(seed, b)`` (``seed``
    may be an int or a list of ints), so the
    result does not depend on evaluation order. A failing resample is redrawn
    from the same stream up to ``max_retries`` times.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    reps, failures = [], 0
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        for _ in range(max_retries + 1):
            try:
                value = estimator(table.take(resample_indices(table, rng, stratified)))
                break
            except (HybridControlError, np.linalg.LinAlgError):
                failures += 1
        else:
            raise EstimatorFailure(f"bootstrap replicate {b} failed {max_retries + 1} times")
        reps.append(np.atleast_1d(np.asarray(value, dtype=float)))
    reps = np.vstack(reps)
    se = reps.std(axis=0, ddof=1) if B > 1 else np.zeros(reps.shape[1])
    return BootstrapResult(se, reps, failures)


def bootstrap_se(table, estimator, B=1000, seed=0, stratified=True):
    se = bootstrap(table, estimator, B, seed, stratified).se
    return float(se[0]) if se.size == 1 else se


def bootstrap_variance(table, method, w, spec: ModelSpec, scale="difference", B=1000,
                       seed=0, stratified=True) -> VarianceReport:
    from .estimators import estimate

    def fn(t):
        e = estimate(t, method, w, spec, scale)
        return e.mu1, e.mu0, e.delta

    res = bootstrap(table, fn, B, seed, stratified)
    cov = np.cov(res.replicates[:, :2].T, ddof=1) if B > 1 else np.zeros((2, 2))
    se = res.se
    return VarianceReport(method, float(se[0]), float(se[1]), float(se[2]), cov,
                          source=f"bootstrap(B={B})")


def wald_ci(est: float, se: float, level: float = 0.95):
    if se < 0:
        raise ValueError("standard error must be nonnegative")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    half = ndtri((1 + level) / 2) * se
    return est - half, est + half
