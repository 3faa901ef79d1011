"""CSV ingestion, configuration files, report writers and the command line.

Two subcommands::

    hybrid-control analyze --data study.csv --config analysis.ini --out-dir out/
    hybrid-control simulate --config scenario.ini --reps 10000 --seed 1 --out-dir out/
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ObservationTable, effect_scale, link_family, validate_table
from .errors import HybridControlError, MalformedRow, ParseError
from .estimators import METHODS, ModelSpec, estimate
from .inference import (analytic_variance, bootstrap_variance, variance_weighted_regression,
                        wald_ci)
from .simulation import PARAMS, MonteCarloSummary, Scenario, run_monte_carlo

log = logging.getLogger(__name__)

REQUIRED = ("z", "a", "y")
ANALYSIS_FIELDS = ("method", "w", "mu1", "se_mu1", "mu0", "se_mu0", "delta", "se_delta",
                   "ci_lo", "ci_hi", "se_source", "error")
BOOTSTRAP_METHODS = ("unadjusted", "ps_weighting")


# --- input -----------------------------------------------------------------

def read_table(path, covariates: Optional[Sequence[str]] = None) -> ObservationTable:
    """Load a ``z,a,y,<covariates...>`` CSV file.

    Every column other than ``z``, ``a`` and ``y`` becomes a covariate in
    header order unless ``covariates`` selects a subset. Row numbers in error
    messages count data rows from 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for col in REQUIRED:
            if col not in header:
                raise ParseError(f"{path}: missing required column {col!r}", column=col)
        dupes = {h for h in header if header.count(h) > 1}
        if dupes:
            raise ParseError(f"{path}: duplicate columns {sorted(dupes)}")
        cov_names = [h for h in header if h not in REQUIRED]
        if covariates is not None:
            missing = [c for c in covariates if c not in cov_names]
            if missing:
                raise ParseError(f"{path}: no column named {missing[0]!r}", column=missing[0])
            cov_names = list(covariates)
        idx = {h: i for i, h in enumerate(header)}
        rows = []
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(rec)} fields, "
                                 f"expected {len(header)}", row=lineno)
            vals = []
            for col in REQUIRED + tuple(cov_names):
                text = rec[idx[col]].strip()
                try:
                    vals.append(float(text))
                except ValueError:
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: "
                                     f"not a number: {text!r}", row=lineno, column=col) from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows)
    table = ObservationTable(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3:].reshape(len(rows), -1),
                             tuple(cov_names))
    try:
        validate_table(table)
    except MalformedRow as exc:
        if exc.row is not None:
            raise MalformedRow(f"{path}: data row {exc.row + 1}: {exc}", row=exc.row + 1) from None
        raise
    return table


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in _list(text)]


@dataclass(frozen=True)
class AnalysisConfig:
    methods: tuple = METHODS
    w_values: tuple = (0.5,)
    effect_scale: str = "difference"
    covariates: Optional[tuple] = None
    sqrt: tuple = ()
    square: tuple = ()
    interact: tuple = ()
    or_columns: tuple = ()
    or_link: str = "identity"
    treated_columns: Optional[tuple] = None
    treated_link: Optional[str] = None
    ps_columns: tuple = ()
    ci_level: float = 0.95
    bootstrap: bool = True
    bootstrap_B: int = 1000
    seed: int = 0
    stratified: bool = True
    wr_variance: str = "stacked"

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if any(not 0 <= w <= 1 for w in self.w_values):
            raise ValueError("w values must lie in [0, 1]")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.wr_variance not in ("stacked", "fixed"):
            raise ValueError("wr_variance must be 'stacked' or 'fixed'")
        effect_scale(self.effect_scale)
        link_family(self.or_link)
        if self.treated_link is not None:
            link_family(self.treated_link)

    @property
    def model_spec(self) -> ModelSpec:
        return ModelSpec(or_columns=self.or_columns, or_columns_treated=self.treated_columns,
                         ps_columns=self.ps_columns, link=self.or_link,
                         link_treated=self.treated_link)

    def prepare(self, table: ObservationTable) -> ObservationTable:
        """Apply configured transformations and check referenced columns exist."""
        t = table.derive(self.sqrt, self.square, self.interact)
        used = set(self.or_columns) | set(self.ps_columns) | set(self.treated_columns or ())
        missing = sorted(c for c in used if c not in t.names)
        if missing:
            raise ParseError(f"model columns not found in data: {missing}", column=missing[0])
        return t


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def load_analysis_config(path) -> AnalysisConfig:
    cp = _parser()
    if not cp.read(path, encoding="utf-8"):
        raise ParseError(f"cannot read config file {path}")
    kw = {}
    if cp.has_section("analysis"):
        s = cp["analysis"]
        if "methods" in s:
            m = _list(s["methods"])
            kw["methods"] = METHODS if m == ["all"] else tuple(m)
        if "w" in s:
            kw["w_values"] = tuple(_floats(s["w"]))
        if "effect_scale" in s:
            kw["effect_scale"] = s["effect_scale"].strip()
        if "ci_level" in s:
            kw["ci_level"] = s.getfloat("ci_level")
        if "covariates" in s:
            kw["covariates"] = tuple(_list(s["covariates"]))
        if "wr_variance" in s:
            kw["wr_variance"] = s["wr_variance"].strip()
    if cp.has_section("transforms"):
        s = cp["transforms"]
        kw["sqrt"] = tuple(_list(s.get("sqrt", "")))
        kw["square"] = tuple(_list(s.get("square", "")))
        pairs = []
        for item in _list(s.get("interact", "")):
            parts = item.split(":")
            if len(parts) != 2:
                raise ParseError(f"interaction {item!r} must look like col1:col2")
            pairs.append((parts[0].strip(), parts[1].strip()))
        kw["interact"] = tuple(pairs)
    if cp.has_section("outcome_model"):
        s = cp["outcome_model"]
        kw["or_columns"] = tuple(_list(s.get("columns", "")))
        kw["or_link"] = s.get("link", "identity").strip()
    if cp.has_section("treated_outcome_model"):
        s = cp["treated_outcome_model"]
        kw["treated_columns"] = tuple(_list(s.get("columns", "")))
        if "link" in s:
            kw["treated_link"] = s["link"].strip()
    if cp.has_section("propensity_model"):
        kw["ps_columns"] = tuple(_list(cp["propensity_model"].get("columns", "")))
    if cp.has_section("bootstrap"):
        s = cp["bootstrap"]
        kw["bootstrap"] = s.getboolean("enabled", True)
        kw["bootstrap_B"] = s.getint("B", 1000)
        kw["seed"] = s.getint("seed", 0)
        kw["stratified"] = s.getboolean("stratified", True)
    return AnalysisConfig(**kw)


def load_scenarios(path=None) -> list[Scenario]:
    """Scenarios from a ``[scenario]`` section.

    ``covariates`` and ``outcome`` accept comma-separated lists; one scenario
    is produced per combination. Without a file, the four settings of the
    published simulation study are returned.
    """
    kw, covs, outs = {}, ["one", "two"], ["binary", "continuous"]
    if path is not None:
        cp = _parser()
        if not cp.read(path, encoding="utf-8"):
            raise ParseError(f"cannot read config file {path}")
        if cp.has_section("scenario"):
            s = cp["scenario"]
            covs = _list(s.get("covariates", "one, two"))
            outs = _list(s.get("outcome", "binary, continuous"))
            for key in ("n_external", "n_rct"):
                if key in s:
                    kw[key] = s.getint(key)
            for key in ("w", "rct_cov_mean", "rct_cov_sd", "ext_cov_mean", "ext_cov_sd",
                        "ci_level"):
                if key in s:
                    kw[key] = s.getfloat(key)
            for key in ("or_spec", "ps_spec", "allocation", "wr_variance"):
                if key in s:
                    kw[key] = s[key].strip()
            if "alloc_ratio" in s:
                t, c = s["alloc_ratio"].split(":")
                kw["alloc_ratio"] = (int(t), int(c))
    return [Scenario(covariates=c, outcome=o, **kw) for c in covs for o in outs]


def scenario_to_config(sc: Scenario) -> str:
    lines = ["[scenario]"]
    for key in ("covariates", "outcome", "n_external", "n_rct", "w", "or_spec", "ps_spec",
                "rct_cov_mean", "rct_cov_sd", "ext_cov_mean", "ext_cov_sd", "allocation",
                "ci_level", "wr_variance"):
        lines.append(f"{key} = {getattr(sc, key)}")
    lines.append(f"alloc_ratio = {sc.alloc_ratio[0]}:{sc.alloc_ratio[1]}")
    return "\n".join(lines) + "\n"


# --- analysis --------------------------------------------------------------

@dataclass
class AnalysisReport:
    rows: list = field(default_factory=list)

    @property
    def errors(self) -> list:
        return [r for r in self.rows if r["error"]]


def _cell_seed(seed: int, index: int):
    return [int(seed), int(index)]


def analyze(config: AnalysisConfig, table: ObservationTable) -> AnalysisReport:
    """Estimate every (method, w) cell; failures are recorded in the row, not raised."""
    table = config.prepare(table)
    spec = config.model_spec
    report = AnalysisReport()
    cells = []
    for m in config.methods:
        cells += [(m, None)] if m == "rct_only" else [(m, w) for w in config.w_values]
    for k, (method, w) in enumerate(cells):
        row = dict.fromkeys(ANALYSIS_FIELDS, math.nan)
        row.update(method=method, w=w if w is not None else math.nan, se_source="", error="")
        try:
            est = estimate(table, method, 0.0 if w is None else w, spec, config.effect_scale)
            row.update(mu1=est.mu1, mu0=est.mu0, delta=est.delta)
            if method in BOOTSTRAP_METHODS:
                if config.bootstrap:
                    var = bootstrap_variance(table, method, w, spec, config.effect_scale,
                                             config.bootstrap_B, _cell_seed(config.seed, k),
                                             config.stratified)
                else:
                    var = None
            elif method == "weighted_regression":
                var = variance_weighted_regression(table, est, spec,
                                                   propensity=config.wr_variance)
            else:
                var = analytic_variance(table, est, spec)
            if var is not None:
                row.update(se_mu1=var.se_mu1, se_mu0=var.se_mu0, se_delta=var.se_delta,
                           se_source=var.source)
                row["ci_lo"], row["ci_hi"] = wald_ci(est.delta, var.se_delta, config.ci_level)
        except HybridControlError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            log.warning("%s (w=%s) failed: %s", method, w, exc)
        report.rows.append(row)
    return report


def _fmt_full(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def _fmt6(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.6g}"


def write_csv(path, fields, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(fields)
        for r in rows:
            wr.writerow([_fmt_full(r[f]) for f in fields])


def read_csv_rows(path, text_fields=("method", "se_source", "error", "block", "or_model",
                                     "ps_model")) -> list[dict]:
    """Inverse of :func:`write_csv`: blanks become NaN, numbers floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = []
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                row[k] = v if k in text_fields else (float(v) if v != "" else math.nan)
            rows.append(row)
    return rows


def aligned_table(fields, rows, formatter=_fmt6) -> str:
    cells = [[formatter(r[f]) for f in fields] for r in rows]
    widths = [max(len(f), *(len(c[i]) for c in cells)) if cells else len(f)
              for i, f in enumerate(fields)]
    # text left, numbers right
    text = [all(isinstance(r[f], str) for r in rows) for f in fields]
    out = ["  ".join(f.ljust(wd) for f, wd in zip(fields, widths)).rstrip()]
    out.append("  ".join("-" * wd for wd in widths))
    for c in cells:
        out.append("  ".join(v.ljust(wd) if t else v.rjust(wd)
                             for v, wd, t in zip(c, widths, text)).rstrip())
    return "\n".join(out) + "\n"


def write_analysis(report: AnalysisReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, txt_path = out / "estimates.csv", out / "estimates.txt"
    write_csv(csv_path, ANALYSIS_FIELDS, report.rows)
    shown = [f for f in ANALYSIS_FIELDS if f != "error"]
    text = aligned_table(shown, report.rows)
    for r in report.errors:
        text += f"\n{r['method']} (w={_fmt6(r['w'])}): {r['error']}"
    txt_path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return [csv_path, txt_path]


# --- simulation reports ----------------------------------------------------

TABLE1_FIELDS = (("block", "method", "or_model", "ps_model", "reps", "failures")
                 + tuple(f"bias_{p}" for p in PARAMS) + tuple(f"sd_{p}" for p in PARAMS)
                 + tuple(f"mcse_bias_{p}" for p in PARAMS) + tuple(f"mcse_sd_{p}" for p in PARAMS))
TABLE2_FIELDS = (("block", "method", "or_model", "ps_model", "reps")
                 + tuple(f"coverage_{p}" for p in PARAMS)
                 + tuple(f"mcse_coverage_{p}" for p in PARAMS))


def summary_rows(summary: MonteCarloSummary):
    t1, t2 = [], []
    for c in summary.cells:
        base = dict(block=summary.scenario.label, method=c.cell.method,
                    or_model=c.cell.or_spec or "", ps_model=c.cell.ps_spec or "", reps=c.reps)
        r1 = dict(base, failures=c.failures)
        for i, p in enumerate(PARAMS):
            r1[f"bias_{p}"] = c.bias[i]
            r1[f"sd_{p}"] = c.sd[i]
            r1[f"mcse_bias_{p}"] = c.mcse_bias[i]
            r1[f"mcse_sd_{p}"] = c.mcse_sd[i]
        t1.append(r1)
        if np.all(np.isfinite(c.coverage)):
            r2 = dict(base)
            for i, p in enumerate(PARAMS):
                r2[f"coverage_{p}"] = c.coverage[i]
                r2[f"mcse_coverage_{p}"] = c.mcse_coverage[i]
            t2.append(r2)
    return t1, t2


def simulate(scenarios: Sequence[Scenario], reps: int, seed: int, workers: int = 1):
    return [run_monte_carlo(sc, reps=reps, seed=seed, workers=workers) for sc in scenarios]


def write_simulation(summaries, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t1, t2 = [], []
    for s in summaries:
        a, b = summary_rows(s)
        t1 += a
        t2 += b
    paths = [out / "table1.csv", out / "table2.csv", out / "table1.txt", out / "table2.txt"]
    write_csv(paths[0], TABLE1_FIELDS, t1)
    write_csv(paths[1], TABLE2_FIELDS, t2)
    show1 = ("method", "or_model", "ps_model") + TABLE1_FIELDS[6:12]
    show2 = ("method", "or_model", "ps_model") + TABLE2_FIELDS[5:8]
    for path, rows, show in ((paths[2], t1, show1), (paths[3], t2, show2)):
        chunks = []
        for s in summaries:
            block = [r for r in rows if r["block"] == s.scenario.label]
            truth = ", ".join(f"{v:.6g}" for v in s.truth)
            chunks.append(f"{s.scenario.label} (reps={s.reps}, seed={s.seed}, "
                          f"truth=({truth}))\n" + aligned_table(show, block))
        path.write_text("\n".join(chunks), encoding="utf-8")
    return paths


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybrid-control",
                                 description="Estimators for RCTs with an external control arm.")
    sub = ap.add_subparsers(dest="command", required=True)
    an = sub.add_parser("analyze", help="estimate (mu1, mu0, delta) on one dataset")
    an.add_argument("--data", required=True, help="CSV with columns z,a,y,<covariates>")
    an.add_argument("--config", help="analysis configuration file")
    an.add_argument("--out-dir", default=".", help="directory for estimates.csv/.txt")
    an.add_argument("--seed", type=int, help="bootstrap seed (overrides config)")
    an.add_argument("--bootstrap-B", type=int, help="bootstrap resamples (overrides config)")
    sim = sub.add_parser("simulate", help="Monte Carlo bias/SD/coverage tables")
    sim.add_argument("--config", help="scenario configuration file")
    sim.add_argument("--out-dir", default=".", help="directory for table1/table2 outputs")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--workers", type=int, default=1)
    for p in (an, sim):
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "analyze":
            config = load_analysis_config(args.config) if args.config else AnalysisConfig()
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            if args.bootstrap_B is not None:
                config = replace(config, bootstrap_B=args.bootstrap_B)
            table = read_table(args.data, config.covariates)
            report = analyze(config, table)
            for p in write_analysis(report, args.out_dir):
                log.info("wrote %s", p)
            if report.errors:
                for r in report.errors:
                    print(f"failed: {r['method']} (w={_fmt6(r['w'])}): {r['error']}",
                          file=sys.stderr)
                return 1
            return 0
        scenarios = load_scenarios(args.config)
        summaries = simulate(scenarios, args.reps, args.seed, args.workers)
        for p in write_simulation(summaries, args.out_dir):
            log.info("wrote %s", p)
        return 0
    except (HybridControlError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
