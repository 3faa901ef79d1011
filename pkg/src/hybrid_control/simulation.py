"""Data-generating processes and the Monte Carlo engine.

Each replication ``r`` of a run seeded with ``seed`` draws from its own
generator keyed by ``(seed, r, purpose)``, so a run's output does not depend
on how replications are split across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import expit, ndtri

from .core import DIFFERENCE, ObservationTable, validate_table
from .errors import HybridControlError, TooManyFailures
from .estimators import (
    PointEstimates,
    fit_control_model,
    fit_treated_model,
    mu0_augmentation,
    mu0_gcomputation,
    mu0_ps_weighting,
    mu0_rct_only,
    mu0_unadjusted,
    mu0_weighted_regression,
    mu1_augmented,
    mu1_simple,
    ModelSpec,
)
from .inference import (
    variance_augmentation,
    variance_gcomputation,
    variance_weighted_regression,
)
from .propensity import fit_propensity

DATA_STREAM = 0
PARAMS = ("mu1", "mu0", "delta")


@dataclass(frozen=True)
class Scenario:
    covariates: str = "one"          # "one" or "two"
    outcome: str = "continuous"      # "continuous" or "binary"
    n_external: int = 100
    n_rct: int = 150
    alloc_ratio: tuple = (2, 1)      # treated : control
    w: float = 0.5
    or_spec: str = "both"            # "correct", "incorrect" or "both"
    ps_spec: str = "both"
    rct_cov_mean: float = 0.0
    rct_cov_sd: float = 1.0
    ext_cov_mean: float = -0.5
    ext_cov_sd: float = 1.5
    allocation: str = "exact"        # "exact" or "bernoulli"
    ci_level: float = 0.95
    wr_variance: str = "stacked"     # "stacked" or "fixed" propensity weights

    def __post_init__(self):
        if self.covariates not in ("one", "two"):
            raise ValueError(f"covariates must be 'one' or 'two', got {self.covariates!r}")
        if self.outcome not in ("continuous", "binary"):
            raise ValueError(f"outcome must be 'continuous' or 'binary', got {self.outcome!r}")
        if self.n_external < 1 or self.n_rct < 2:
            raise ValueError("need at least one external subject and two RCT subjects")
        if self.allocation not in ("exact", "bernoulli"):
            raise ValueError(f"allocation must be 'exact' or 'bernoulli', got {self.allocation!r}")
        for name in ("or_spec", "ps_spec"):
            if getattr(self, name) not in ("correct", "incorrect", "both"):
                raise ValueError(f"{name} must be correct, incorrect or both")
        if self.wr_variance not in ("stacked", "fixed"):
            raise ValueError("wr_variance must be 'stacked' or 'fixed'")
        if not 0 <= self.w <= 1:
            raise ValueError("w must lie in [0, 1]")
        n_t = self.n_treated
        if self.allocation == "exact" and not 0 < n_t < self.n_rct:
            raise ValueError("allocation leaves an RCT arm empty")

    @property
    def n_treated(self) -> int:
        r_t, r_c = self.alloc_ratio
        return int(round(self.n_rct * r_t / (r_t + r_c)))

    @property
    def pi(self) -> float:
        r_t, r_c = self.alloc_ratio
        return r_t / (r_t + r_c)

    @property
    def link(self) -> str:
        return "logit" if self.outcome == "binary" else "identity"

    @property
    def label(self) -> str:
        cov = "one covariate" if self.covariates == "one" else "two covariates"
        return f"{cov}, {self.outcome} outcome"


# working-model columns by covariate setting
MODEL_TERMS = {
    "one": {
        "or": {"correct": ("x1", "x1^2"), "incorrect": ("x1",)},
        "ps": {"correct": ("x1", "x1^2"), "incorrect": ("x1",)},
    },
    "two": {
        "or": {"correct": ("x1", "x2", "x1*x2", "x2^2"), "incorrect": ("x1", "x2")},
        "ps": {"correct": ("x1", "x2", "x1^2", "x2^2"), "incorrect": ("x1", "x2")},
    },
}


def linear_predictor(sc: Scenario, x: np.ndarray, a) -> np.ndarray:
    if sc.covariates == "one":
        x1 = x[:, 0]
        return -0.5 + 0.3 * x1 + 0.5 * x1**2 + a * (0.5 - 0.1 * x1)
    x1, x2 = x[:, 0], x[:, 1]
    return (-0.5 + 0.5 * x1 + 0.2 * x2 - 0.25 * x1 * x2 + 0.5 * x2**2
            + a * (0.5 - 0.1 * x1))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_dataset(sc: Scenario, seed=0) -> ObservationTable:
    """Simulate one hybrid control study.

    RCT rows come first, then external controls. Base covariates are named
    ``x1`` (and ``x2``); all squares and the interaction are materialized so
    either working-model specification can be selected by column name.
    """
    rng = _rng(seed)
    p = 1 if sc.covariates == "one" else 2
    x_rct = rng.normal(sc.rct_cov_mean, sc.rct_cov_sd, size=(sc.n_rct, p))
    x_ext = rng.normal(sc.ext_cov_mean, sc.ext_cov_sd, size=(sc.n_external, p))
    if sc.allocation == "exact":
        a_rct = np.zeros(sc.n_rct)
        a_rct[rng.permutation(sc.n_rct)[:sc.n_treated]] = 1.0
    else:
        a_rct = (rng.random(sc.n_rct) < sc.pi).astype(float)
    x = np.vstack([x_rct, x_ext])
    z = np.concatenate([np.ones(sc.n_rct), np.zeros(sc.n_external)])
    a = np.concatenate([a_rct, np.zeros(sc.n_external)])
    eta = linear_predictor(sc, x, a)
    if sc.outcome == "binary":
        y = (rng.random(z.size) < expit(eta)).astype(float)
    else:
        y = eta + rng.standard_normal(z.size)
    names = ("x1",) if p == 1 else ("x1", "x2")
    table = ObservationTable(z, a, y, x, names)
    if p == 1:
        return table.derive(square=("x1",))
    return table.derive(square=("x1", "x2"), interact=(("x1", "x2"),))


def true_values(sc: Scenario, nodes: int = 120):
    """``(mu1, mu0, delta)`` on the difference scale under the RCT covariate law."""
    m, s = sc.rct_cov_mean, sc.rct_cov_sd
    if sc.outcome == "continuous":
        ex2 = m * m + s * s
        if sc.covariates == "one":
            mu0 = -0.5 + 0.3 * m + 0.5 * ex2
        else:
            mu0 = -0.5 + 0.5 * m + 0.2 * m - 0.25 * m * m + 0.5 * ex2
        mu1 = mu0 + 0.5 - 0.1 * m
        return mu1, mu0, mu1 - mu0
    t, wts = hermegauss(nodes)
    wts = wts / wts.sum()
    xs = m + s * t
    if sc.covariates == "one":
        grid, gw = xs[:, None], wts
    else:
        g1, g2 = np.meshgrid(xs, xs, indexing="ij")
        grid = np.column_stack([g1.ravel(), g2.ravel()])
        gw = np.outer(wts, wts).ravel()
    mu0 = float(gw @ expit(linear_predictor(sc, grid, 0.0)))
    mu1 = float(gw @ expit(linear_predictor(sc, grid, 1.0)))
    return mu1, mu0, mu1 - mu0


@dataclass(frozen=True)
class Cell:
    method: str
    or_spec: Optional[str] = None
    ps_spec: Optional[str] = None

    @property
    def label(self) -> str:
        return "/".join(x for x in (self.method, self.or_spec, self.ps_spec) if x)


def scenario_cells(sc: Scenario, methods: Optional[Sequence[str]] = None) -> list[Cell]:
    """Method/model combinations in table order, filtered by the scenario's specs."""
    ors = ("correct", "incorrect") if sc.or_spec == "both" else (sc.or_spec,)
    pss = ("correct", "incorrect") if sc.ps_spec == "both" else (sc.ps_spec,)
    cells = [Cell("rct_only")]
    cells += [Cell("augmentation", o) for o in ors]
    cells += [Cell("unadjusted")]
    cells += [Cell("ps_weighting", None, p) for p in pss]
    cells += [Cell("g_computation", o) for o in ors]
    cells += [Cell("weighted_regression", o, p) for o in ors for p in pss]
    if methods is not None:
        cells = [c for c in cells if c.method in methods]
    return cells


def _safe(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (HybridControlError, np.linalg.LinAlgError, FloatingPointError):
        return None


def analyze_replicate(table: ObservationTable, sc: Scenario, cells: Sequence[Cell]):
    """Estimates and analytic SEs for every cell on one dataset.

    Returns two ``len(cells) x 3`` arrays ``(estimates, ses)``; entries are
    NaN where a cell failed or (for SEs) has no analytic variance.
    """
    terms = MODEL_TERMS[sc.covariates]
    link = sc.link
    w = sc.w
    est = np.full((len(cells), 3), np.nan)
    ses = np.full((len(cells), 3), np.nan)
    validate_table(table)

    design_cache = {}

    def design(cols):
        if cols not in design_cache:
            design_cache[cols] = table.design(cols)
        return design_cache[cols]

    fits = {}

    def fitted(kind, spec):
        key = (kind, spec)
        if key not in fits:
            if kind == "ps":
                cols = terms["ps"][spec]
                fits[key] = _safe(fit_propensity, table, design(cols), cols)
            elif kind == "m0":
                fits[key] = _safe(fit_control_model, table, w, design(terms["or"][spec]), link)
            else:
                fits[key] = _safe(fit_treated_model, table, design(terms["or"][spec]), link)
        return fits[key]

    ybar1 = mu1_simple(table)
    for i, cell in enumerate(cells):
        mspec = ModelSpec(or_columns=terms["or"][cell.or_spec] if cell.or_spec else (),
                          ps_columns=terms["ps"][cell.ps_spec] if cell.ps_spec else (),
                          link=link)
        if cell.method in ("rct_only", "unadjusted", "ps_weighting"):
            mu1 = ybar1
            if cell.method == "rct_only":
                mu0 = mu0_rct_only(table)
            elif cell.method == "unadjusted":
                mu0 = mu0_unadjusted(table, w)
            else:
                ps = fitted("ps", cell.ps_spec)
                if ps is None:
                    continue
                mu0 = mu0_ps_weighting(table, ps, w)
            est[i] = (mu1, mu0, mu1 - mu0)
            continue

        m1 = fitted("m1", cell.or_spec)
        if m1 is None:
            continue
        x0 = design(terms["or"][cell.or_spec])
        mu1, _ = mu1_augmented(table, x0, fit=m1)
        pe_fits = {"m1": m1}
        if cell.method in ("augmentation", "g_computation"):
            m0 = fitted("m0", cell.or_spec)
            if m0 is None:
                continue
            fn = mu0_augmentation if cell.method == "augmentation" else mu0_gcomputation
            mu0, _ = fn(table, w, x0, fit=m0)
            pe_fits["m0"] = m0
        else:
            ps = fitted("ps", cell.ps_spec)
            if ps is None:
                continue
            res = _safe(mu0_weighted_regression, table, w, x0, link=link, ps=ps)
            if res is None:
                continue
            mu0, pe_fits["m0"], pe_fits["ps"] = res
        est[i] = (mu1, mu0, mu1 - mu0)
        pe = PointEstimates(cell.method, w, mu1, mu0, mu1 - mu0, DIFFERENCE, pe_fits)
        if cell.method == "weighted_regression":
            rep = _safe(variance_weighted_regression, table, pe, mspec,
                        propensity=sc.wr_variance)
        else:
            vfn = variance_augmentation if cell.method == "augmentation" else variance_gcomputation
            rep = _safe(vfn, table, pe, mspec)
        if rep is not None:
            ses[i] = (rep.se_mu1, rep.se_mu0, rep.se_delta)
    return est, ses


def replicate_seed(seed: int, rep: int, stream: int = DATA_STREAM):
    return np.random.SeedSequence([seed, rep, stream])


def _run_chunk(args):
    sc, cells, seed, start, stop = args
    est = np.full((stop - start, len(cells), 3), np.nan)
    ses = np.full_like(est, np.nan)
    for r in range(start, stop):
        table = generate_dataset(sc, np.random.default_rng(replicate_seed(seed, r)))
        est[r - start], ses[r - start] = analyze_replicate(table, sc, cells)
    return start, est, ses


@dataclass(frozen=True)
class CellSummary:
    cell: Cell
    reps: int
    failures: int
    bias: np.ndarray
    sd: np.ndarray            # NaN when fewer than two successes
    coverage: np.ndarray      # NaN when no analytic SE is available
    mcse_bias: np.ndarray
    mcse_sd: np.ndarray
    mcse_coverage: np.ndarray


@dataclass(frozen=True)
class MonteCarloSummary:
    scenario: Scenario
    truth: tuple
    reps: int
    seed: int
    cells: list = field(default_factory=list)

    def cell(self, method, or_spec=None, ps_spec=None) -> CellSummary:
        for c in self.cells:
            if c.cell == Cell(method, or_spec, ps_spec):
                return c
        raise KeyError((method, or_spec, ps_spec))


def summarize(sc, cells, truth, est, ses, seed, max_failure_rate=0.01) -> MonteCarloSummary:
    reps = est.shape[0]
    truth_arr = np.asarray(truth)
    z = float(ndtri((1 + sc.ci_level) / 2))
    out = []
    for i, cell in enumerate(cells):
        e = est[:, i, :]
        ok = np.all(np.isfinite(e), axis=1)
        failures = int(reps - ok.sum())
        if failures > max_failure_rate * reps:
            raise TooManyFailures(f"{cell.label}: {failures} of {reps} replications failed")
        e = e[ok]
        k = e.shape[0]
        bias = e.mean(axis=0) - truth_arr
        sd = e.std(axis=0, ddof=1) if k > 1 else np.full(3, np.nan)
        s = ses[ok, i, :]
        if np.all(np.isfinite(s)) and k > 0:
            lo, hi = e - z * s, e + z * s
            cov = np.mean((lo <= truth_arr) & (truth_arr <= hi), axis=0)
            mc_cov = np.sqrt(cov * (1 - cov) / k)
        else:
            cov = mc_cov = np.full(3, np.nan)
        out.append(CellSummary(cell, k, failures, bias, sd, cov,
                               sd / math.sqrt(k) if k else np.full(3, np.nan),
                               sd / math.sqrt(2 * (k - 1)) if k > 1 else np.full(3, np.nan),
                               mc_cov))
    return MonteCarloSummary(sc, tuple(float(t) for t in truth), reps, seed, out)


def simulate_replicates(sc: Scenario, cells, reps: int, seed: int, workers: int = 1):
    """Raw ``(estimates, ses)`` arrays of shape ``reps x cells x 3``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    workers = max(1, int(workers))
    n_chunks = min(reps, workers * 4) if workers > 1 else 1
    bounds = np.linspace(0, reps, n_chunks + 1).astype(int)
    tasks = [(sc, cells, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    est = np.empty((reps, len(cells), 3))
    ses = np.empty_like(est)
    if workers == 1:
        results = list(map(_run_chunk, tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    for start, e, s in results:
        est[start:start + e.shape[0]] = e
        ses[start:start + s.shape[0]] = s
    return est, ses


def run_monte_carlo(sc: Scenario, methods=None, reps: int = 1000, seed: int = 0,
                    workers: int = 1) -> MonteCarloSummary:
    """Bias, SD and Wald coverage for every method/model cell of ``sc``."""
    cells = scenario_cells(sc, methods)
    est, ses = simulate_replicates(sc, cells, reps, seed, workers)
    return summarize(sc, cells, true_values(sc), est, ses, seed)


def standard_scenarios(outcomes=("binary", "continuous"), covariates=("one", "two"), **kw):
    return [Scenario(covariates=c, outcome=o, **kw) for c in covariates for o in outcomes]


def scaled(sc: Scenario, factor: int) -> Scenario:
    return replace(sc, n_external=sc.n_external * factor, n_rct=sc.n_rct * factor)
