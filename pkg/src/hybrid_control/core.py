"""Observation tables, design summaries, link families and effect scales."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DegenerateDesign, DimensionMismatch, MalformedRow, ScaleDomainError


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ObservationTable:
    """Rows of (z, a, y, x) stored column-wise.

    ``z`` is 1 for RCT subjects and 0 for external controls, ``a`` is the
    treatment indicator, ``y`` the outcome (binary outcomes coded 0/1) and
    ``x`` an ``n x p`` covariate matrix whose columns are named by ``names``.
    """

    z: np.ndarray
    a: np.ndarray
    y: np.ndarray
    x: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        z = _frozen(self.z)
        a = _frozen(self.a)
        y = _frozen(self.y)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else np.zeros((len(z), 0))
        if x.ndim != 2:
            raise MalformedRow("covariates must form a 2-d array")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DimensionMismatch(f"{len(names)} names for {x.shape[1]} covariate columns")
        for col, other in (("a", a), ("y", y)):
            if other.shape != z.shape:
                raise MalformedRow(f"column {col!r} has {other.size} entries, expected {z.size}")
        if x.shape[0] != z.size:
            raise MalformedRow(f"covariate matrix has {x.shape[0]} rows, expected {z.size}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return int(self.z.size)

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    def column(self, name: str) -> np.ndarray:
        try:
            return self.x[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"no covariate column named {name!r}") from None

    def design(self, columns: Sequence[str] = ()) -> np.ndarray:
        """Design matrix with a leading ones column followed by ``columns``."""
        cols = [np.ones(self.n)] + [self.column(c) for c in columns]
        return np.column_stack(cols)

    def with_columns(self, **new: np.ndarray) -> "ObservationTable":
        """Return a copy with extra covariate columns appended."""
        if not new:
            return self
        extra = np.column_stack([np.asarray(v, dtype=float) for v in new.values()])
        return ObservationTable(self.z, self.a, self.y, np.hstack([self.x, extra]),
                                self.names + tuple(new))

    def derive(self, sqrt=(), square=(), interact=()) -> "ObservationTable":
        """Materialize transformed covariates as new columns.

        ``sqrt`` and ``square`` take column names and add ``sqrt(c)`` and
        ``c^2``; ``interact`` takes ``(c1, c2)`` pairs and adds ``c1*c2``.
        Square roots are taken first so later terms may refer to them.
        """
        t = self
        for c in sqrt:
            v = t.column(c)
            if np.any(v < 0):
                raise MalformedRow(f"square root of negative values in column {c!r}")
            t = t.with_columns(**{f"sqrt({c})": np.sqrt(v)})
        for c in square:
            t = t.with_columns(**{f"{c}^2": t.column(c) ** 2})
        for c1, c2 in interact:
            t = t.with_columns(**{f"{c1}*{c2}": t.column(c1) * t.column(c2)})
        return t

    def with_outcome(self, y) -> "ObservationTable":
        return ObservationTable(self.z, self.a, y, self.x, self.names)

    def take(self, idx) -> "ObservationTable":
        """Row subset (or resample) by integer index."""
        idx = np.asarray(idx)
        return ObservationTable(self.z[idx], self.a[idx], self.y[idx], self.x[idx], self.names)

    # cohort masks
    @property
    def internal_control(self) -> np.ndarray:
        return (self.z == 1) & (self.a == 0)

    @property
    def treated(self) -> np.ndarray:
        return (self.z == 1) & (self.a == 1)

    @property
    def external(self) -> np.ndarray:
        return self.z == 0


@dataclass(frozen=True)
class DesignInfo:
    tau_hat: float
    pi_hat: float
    n: int
    n_external: int
    n_internal_control: int
    n_treated: int


def validate_table(table: ObservationTable) -> DesignInfo:
    """Check row invariants and return empirical design proportions.

    Raises :class:`MalformedRow` for non-binary indicators or treated
    external subjects, and :class:`DegenerateDesign` when either RCT arm is
    empty or one of the proportions falls on the boundary.
    """
    if table.n == 0:
        raise DegenerateDesign("table has no rows")
    z, a = table.z, table.a
    for name, col in (("z", z), ("a", a)):
        bad = np.flatnonzero((col != 0) & (col != 1))
        if bad.size:
            raise MalformedRow(f"{name} must be 0 or 1 (row {bad[0]})", row=int(bad[0]))
    bad = np.flatnonzero((z == 0) & (a == 1))
    if bad.size:
        raise MalformedRow(f"external subject marked as treated (row {bad[0]})", row=int(bad[0]))
    bad = np.flatnonzero(~np.isfinite(table.y) | ~np.all(np.isfinite(table.x), axis=1))
    if bad.size:
        raise MalformedRow(f"non-finite value (row {bad[0]})", row=int(bad[0]))

    n_rct = int(z.sum())
    n_trt = int((z * a).sum())
    n_ctl = n_rct - n_trt
    if n_ctl == 0:
        raise DegenerateDesign("no internal control subjects")
    if n_trt == 0:
        raise DegenerateDesign("no treated subjects")
    tau = n_rct / table.n
    pi = n_trt / n_rct
    if not 0 < tau < 1:
        raise DegenerateDesign(f"tau_hat={tau} is not in (0, 1)")
    return DesignInfo(tau, pi, table.n, table.n - n_rct, n_ctl, n_trt)


@dataclass(frozen=True)
class LinkFamily:
    """Inverse link ``h`` with its derivative."""

    kind: str
    h: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    h_dot: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def _expit_dot(eta):
    p = expit(eta)
    return p * (1.0 - p)


IDENTITY = LinkFamily("identity", lambda eta: np.asarray(eta, dtype=float),
                      lambda eta: np.ones_like(np.asarray(eta, dtype=float)))
LOG = LinkFamily("log", np.exp, np.exp)
LOGIT = LinkFamily("logit", expit, _expit_dot)

LINKS = {f.kind: f for f in (IDENTITY, LOG, LOGIT)}


def link_family(kind: str | LinkFamily) -> LinkFamily:
    if isinstance(kind, LinkFamily):
        return kind
    try:
        return LINKS[kind]
    except KeyError:
        raise ValueError(f"unknown link {kind!r}; expected one of {sorted(LINKS)}") from None


@dataclass(frozen=True)
class EffectScale:
    """Transform ``g`` defining the effect ``g(mu1) - g(mu0)``."""

    kind: str
    g: Callable[[float], float] = field(repr=False)
    g_dot: Callable[[float], float] = field(repr=False)
    lower: float = -np.inf
    upper: float = np.inf

    def check(self, mu: float) -> None:
        if not (self.lower < mu < self.upper):
            raise ScaleDomainError(f"{self.kind} scale requires a mean in "
                                   f"({self.lower}, {self.upper}), got {mu}")

    def __call__(self, mu: float) -> float:
        self.check(mu)
        return float(self.g(mu))

    def derivative(self, mu: float) -> float:
        self.check(mu)
        return float(self.g_dot(mu))


DIFFERENCE = EffectScale("difference", lambda m: m, lambda m: 1.0)
LOG_RATIO = EffectScale("log_ratio", np.log, lambda m: 1.0 / m, lower=0.0)
LOG_ODDS_RATIO = EffectScale("log_odds_ratio", lambda m: np.log(m / (1.0 - m)),
                             lambda m: 1.0 / (m * (1.0 - m)), lower=0.0, upper=1.0)

SCALES = {s.kind: s for s in (DIFFERENCE, LOG_RATIO, LOG_ODDS_RATIO)}


def effect_scale(kind: str | EffectScale) -> EffectScale:
    if isinstance(kind, EffectScale):
        return kind
    try:
        return SCALES[kind]
    except KeyError:
        raise ValueError(f"unknown effect scale {kind!r}; expected one of {sorted(SCALES)}") from None
