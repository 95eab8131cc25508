"""Experiment configs, parameter sweeps and CSV / gnuplot / manifest output."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .analysis import lru_hit_rate_approx, upper_bound_hit_prob
from .coupon import (
    DEFAULT_SAMPLES,
    approximation1_error,
    characteristic_time_tc,
    empirical_tail_check,
    power_scaled,
    waiting_time_sample,
    zipf_convergence_check,
)
from .model import FreshnessProfile, build_zipf, derive_seed, make_rng
from .policy import PolicyKind
from .simulator import SimConfig, run

log = logging.getLogger(__name__)

OUT_ENV = "FRESHCACHE_OUT"
DEFAULT_OUT = "results"
UPPER_BOUND = "UpperBound"
ALL_SERIES = ["LP", "LRU", "MLP", "MLRU", "LEH", UPPER_BOUND]


class ConfigError(ValueError):
    pass


class Experiment(enum.Enum):
    HIT_VS_BETA = "HitVsBeta"
    HIT_VS_F = "HitVsF"
    HIT_RATE_PER_CONTENT = "HitRatePerContent"
    APPROX1_ERROR = "Approx1Error"
    CHAR_TIME_CV = "CharTimeCv"
    TAIL_BOUNDS = "TailBounds"
    ZIPF_CONVERGENCE = "ZipfConvergence"

    @property
    def stem(self) -> str:
        return {
            "HitVsBeta": "hit_vs_beta", "HitVsF": "hit_vs_f",
            "HitRatePerContent": "hit_rate_per_content", "Approx1Error": "approx1_error",
            "CharTimeCv": "char_time_cv", "TailBounds": "tail_bounds",
            "ZipfConvergence": "zipf_convergence",
        }[self.value]


DESCRIPTIONS = {
    Experiment.HIT_VS_BETA: "aggregate hit probability per policy against the Zipf exponent",
    Experiment.HIT_VS_F: "aggregate hit probability per policy against a uniform freshness F",
    Experiment.HIT_RATE_PER_CONTENT: "simulated LRU / M-LRU hit-rates of chosen contents vs the approximation",
    Experiment.APPROX1_ERROR: "relative error of t_c as a stand-in for E(T_c(i))",
    Experiment.CHAR_TIME_CV: "coefficient of variation of T_c(i) as n grows",
    Experiment.TAIL_BOUNDS: "empirical tail frequencies of T_m against the equiprobable tail bounds",
    Experiment.ZIPF_CONVERGENCE: "empirical P(T_m = m) over a grid of catalog sizes",
}

ALLOWED_KEYS = {
    "experiment", "n", "m", "beta", "beta_grid", "freshness", "F_grid", "policies",
    "contents", "slots", "warmup", "replications", "seed", "out", "samples", "delta",
    "delta_grid", "n_grid", "m_exponent", "m_scaling", "m_fraction", "lp_estimator",
    "exact_tc",
}
FRESHNESS_KEYS = {"kind", "F", "slope", "values"}

REQUIRED = {
    Experiment.HIT_VS_BETA: ("n", "m", "freshness"),
    Experiment.HIT_VS_F: ("n", "m", "F_grid"),
    Experiment.HIT_RATE_PER_CONTENT: ("n", "m"),
    Experiment.APPROX1_ERROR: (),
    Experiment.CHAR_TIME_CV: ("n_grid",),
    Experiment.TAIL_BOUNDS: ("n", "m"),
    Experiment.ZIPF_CONVERGENCE: ("n_grid", "m_exponent"),
}


def default_beta_grid() -> list:
    coarse = [round(0.1 * k, 10) for k in range(21)]
    zoom = [round(0.05 * k, 10) for k in range(11)]
    return sorted(set(coarse) | set(zoom))


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: Experiment
    n: Optional[int] = None
    m: Optional[int] = None
    betas: tuple = ()
    freshness: Optional[dict] = None
    F_grid: tuple = ()
    policies: tuple = ()
    contents: tuple = ()
    slots: int = 1_000_000
    warmup: Optional[int] = None
    replications: int = 10
    seed: int = 42
    out: str = ""
    samples: int = DEFAULT_SAMPLES
    deltas: tuple = ()
    n_grid: tuple = ()
    m_exponent: Optional[float] = None
    m_scaling: str = "sqrt"
    m_fraction: float = 0.1
    lp_estimator: str = "oracle"
    exact_tc: bool = False

    def profile(self, n: int, F: Optional[int] = None) -> FreshnessProfile:
        if F is not None:
            return FreshnessProfile.uniform(n, F)
        return make_profile(self.freshness, n)

    @property
    def f_kind(self) -> str:
        if self.freshness is None:
            return "uniform" if self.F_grid else "none"
        return self.freshness["kind"]

    def resolved(self) -> dict:
        d = asdict(self)
        d["experiment"] = self.experiment.value
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def make_profile(freshness: dict, n: int) -> FreshnessProfile:
    kind = freshness["kind"]
    if kind == "uniform":
        return FreshnessProfile.uniform(n, freshness["F"])
    if kind == "linear":
        return FreshnessProfile.linear(n, freshness.get("slope", 1))
    values = freshness["values"]
    if len(values) != n:
        raise ConfigError(f"explicit freshness has {len(values)} values, n is {n}")
    return FreshnessProfile.explicit(values)


def _grid(value, key: str, cast=float) -> tuple:
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "step"}
        if extra or not {"start", "stop", "step"} <= set(value):
            raise ConfigError(f"{key}: a range needs exactly start, stop, step")
        start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigError(f"{key}: bad range {value}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        items = [round(start + k * step, 10) for k in range(count)]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    if not items:
        raise ConfigError(f"{key}: grid is empty")
    try:
        return tuple(cast(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: non-numeric grid entry") from None


def _int(raw, key):
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return int(v)


def _parse_freshness(value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError("freshness: expected a mapping with 'kind'")
    unknown = set(value) - FRESHNESS_KEYS
    if unknown:
        raise ConfigError(f"freshness: unknown key {sorted(unknown)[0]!r}")
    kind = str(value.get("kind", "")).lower()
    if kind == "uniform":
        if "F" not in value:
            raise ConfigError("freshness: uniform kind needs 'F'")
        return {"kind": kind, "F": _int(value, "F")}
    if kind == "linear":
        return {"kind": kind, "slope": _int(value, "slope") if "slope" in value else 1}
    if kind == "explicit":
        if "values" not in value:
            raise ConfigError("freshness: explicit kind needs 'values'")
        return {"kind": kind, "values": [int(v) for v in value["values"]]}
    raise ConfigError(f"freshness: unknown kind {value.get('kind')!r}")


def parse_config(text: str) -> ExperimentSpec:
    """Parse a YAML (or JSON) experiment document, fail-closed on unknown keys."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = sorted(set(raw) - ALLOWED_KEYS, key=str)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    try:
        experiment = Experiment(raw["experiment"])
    except ValueError:
        raise ConfigError(f"unknown experiment {raw['experiment']!r}") from None
    for key in REQUIRED[experiment]:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r} for {experiment.value}")

    kw = {"experiment": experiment}
    for key in ("n", "m", "slots", "replications", "seed", "samples"):
        if key in raw:
            kw[key] = _int(raw, key)
    if raw.get("warmup") is not None:
        kw["warmup"] = _int(raw, "warmup")
    if "out" in raw:
        kw["out"] = str(raw["out"])
    if "freshness" in raw:
        kw["freshness"] = _parse_freshness(raw["freshness"])
    if "beta" in raw and "beta_grid" in raw:
        raise ConfigError("give either 'beta' or 'beta_grid', not both")
    if "beta" in raw:
        kw["betas"] = _grid(raw["beta"], "beta")
    elif "beta_grid" in raw:
        kw["betas"] = _grid(raw["beta_grid"], "beta_grid")
    if "F_grid" in raw:
        kw["F_grid"] = _grid(raw["F_grid"], "F_grid", int)
    if "delta" in raw and "delta_grid" in raw:
        raise ConfigError("give either 'delta' or 'delta_grid', not both")
    for key in ("delta", "delta_grid"):
        if key in raw:
            kw["deltas"] = _grid(raw[key], key)
    if "n_grid" in raw:
        kw["n_grid"] = _grid(raw["n_grid"], "n_grid", int)
    if "contents" in raw:
        kw["contents"] = _grid(raw["contents"], "contents", int)
    if "m_exponent" in raw:
        kw["m_exponent"] = float(raw["m_exponent"])
    if "m_fraction" in raw:
        kw["m_fraction"] = float(raw["m_fraction"])
    if "m_scaling" in raw:
        if raw["m_scaling"] not in ("sqrt", "log", "linear"):
            raise ConfigError(f"m_scaling: expected sqrt, log or linear, got {raw['m_scaling']!r}")
        kw["m_scaling"] = raw["m_scaling"]
    if "lp_estimator" in raw:
        kw["lp_estimator"] = str(raw["lp_estimator"])
    if "exact_tc" in raw:
        kw["exact_tc"] = bool(raw["exact_tc"])
    if "policies" in raw:
        names = raw["policies"]
        if not isinstance(names, list) or not names:
            raise ConfigError("policies: expected a non-empty list")
        resolved = []
        for name in names:
            if str(name) == UPPER_BOUND:
                resolved.append(UPPER_BOUND)
            else:
                try:
                    resolved.append(PolicyKind.parse(str(name)).value)
                except ValueError as exc:
                    raise ConfigError(f"policies: {exc}") from None
        kw["policies"] = tuple(resolved)

    spec = ExperimentSpec(**kw)
    return _apply_defaults(spec)


def _apply_defaults(spec: ExperimentSpec) -> ExperimentSpec:
    e = spec.experiment
    changes = {}
    if e in (Experiment.HIT_VS_BETA, Experiment.HIT_RATE_PER_CONTENT, Experiment.APPROX1_ERROR,
             Experiment.CHAR_TIME_CV) and not spec.betas:
        changes["betas"] = tuple(default_beta_grid()) if e is Experiment.HIT_VS_BETA else (
            (1.2,) if e is Experiment.HIT_RATE_PER_CONTENT and spec.F_grid else (0.5, 1.0, 1.5))
    if e in (Experiment.HIT_VS_BETA, Experiment.HIT_VS_F) and not spec.policies:
        changes["policies"] = tuple(ALL_SERIES)
    if e is Experiment.HIT_VS_F:
        if spec.freshness is not None:
            raise ConfigError("HitVsF sweeps a uniform F; drop 'freshness'")
        if len(spec.betas) != 1:
            raise ConfigError("HitVsF needs a single 'beta'")
    if e is Experiment.HIT_RATE_PER_CONTENT:
        if spec.F_grid and spec.freshness is not None:
            raise ConfigError("HitRatePerContent: give 'freshness' for a beta sweep or 'F_grid', not both")
        if not spec.F_grid and spec.freshness is None:
            raise ConfigError("missing required key 'freshness' for HitRatePerContent")
        if spec.F_grid and len(changes.get("betas", spec.betas)) != 1:
            raise ConfigError("HitRatePerContent with F_grid needs a single 'beta'")
        if not spec.contents:
            changes["contents"] = tuple(sorted({1, min(10, spec.n), spec.n}))
    if e is Experiment.APPROX1_ERROR:
        if spec.n is None and not spec.n_grid:
            raise ConfigError("missing required key 'n' (or 'n_grid') for Approx1Error")
    if e is Experiment.TAIL_BOUNDS and not spec.deltas:
        raise ConfigError("missing required key 'delta' (or 'delta_grid') for TailBounds")
    if e is Experiment.ZIPF_CONVERGENCE and len(changes.get("betas", spec.betas)) != 1:
        raise ConfigError("ZipfConvergence needs a single 'beta'")
    spec = replace(spec, **changes)
    _validate(spec)
    return spec


def _validate(spec: ExperimentSpec) -> None:
    if spec.n is not None and spec.n < 1:
        raise ConfigError("n must be positive")
    if spec.m is not None and spec.m < 1:
        raise ConfigError("m must be positive")
    if spec.slots < 1 or spec.replications < 1 or spec.samples < 2:
        raise ConfigError("slots, replications must be positive and samples >= 2")
    if spec.warmup is not None and not 0 <= spec.warmup < spec.slots:
        raise ConfigError("warmup must lie in [0, slots)")
    if any(b < 0 or not math.isfinite(b) for b in spec.betas):
        raise ConfigError("beta values must be finite and non-negative")
    if any(F < 1 for F in spec.F_grid):
        raise ConfigError("F_grid entries must be >= 1")
    if spec.n is not None and any(not 1 <= c <= spec.n for c in spec.contents):
        raise ConfigError(f"contents must lie in 1..{spec.n}")
    if spec.lp_estimator not in ("oracle", "frequency"):
        raise ConfigError("lp_estimator must be 'oracle' or 'frequency'")
    if spec.freshness is not None and spec.n is not None:
        try:
            make_profile(spec.freshness, spec.n)
        except ValueError as exc:
            raise ConfigError(f"freshness: {exc}") from None


# -- running ---------------------------------------------------------------

def output_dir(spec: ExperimentSpec, override: Optional[str] = None) -> Path:
    if override:
        return Path(override)
    if spec.out:
        return Path(spec.out)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _sim_config(spec, n, m, beta, profile, kind, seed):
    return SimConfig(n=n, m=m, beta=beta, profile=profile, kind=PolicyKind(kind),
                     slots=spec.slots, warmup_slots=spec.warmup,
                     replications=spec.replications, master_seed=seed,
                     lp_estimator=spec.lp_estimator)


def _hit_prob_rows(spec, sweep_value, n, m, beta, profile, threads):
    rows = []
    model = build_zipf(n, beta)
    for series in spec.policies:
        if series == UPPER_BOUND:
            rows.append((series, upper_bound_hit_prob(model, profile), 0.0))
            continue
        metrics = run(_sim_config(spec, n, m, beta, profile, series, spec.seed), threads=threads)
        rows.append((series, metrics.hit_prob, metrics.hit_prob_stderr))
        log.debug("%s=%s %s hit_prob=%.5f", *sweep_value, series, metrics.hit_prob)
    log.info("%s=%s done", *sweep_value)
    return rows


def _hit_vs_beta(spec, threads):
    header = ["beta", "policy", "hit_prob", "stderr", "n", "m", "F_kind", "seed"]
    rows = []
    profile = spec.profile(spec.n)
    for beta in spec.betas:
        for series, h, se in _hit_prob_rows(spec, ("beta", beta), spec.n, spec.m, beta, profile, threads):
            rows.append([beta, series, h, se, spec.n, spec.m, spec.f_kind, spec.seed])
    return header, rows


def _hit_vs_f(spec, threads):
    header = ["F", "policy", "hit_prob", "stderr", "n", "m", "beta", "F_kind", "seed"]
    rows = []
    beta = spec.betas[0]
    for F in spec.F_grid:
        profile = spec.profile(spec.n, F)
        for series, h, se in _hit_prob_rows(spec, ("F", F), spec.n, spec.m, beta, profile, threads):
            rows.append([F, series, h, se, spec.n, spec.m, beta, "uniform", spec.seed])
    return header, rows


def _char_time(spec, model, m, index):
    if spec.exact_tc:
        return characteristic_time_tc(model, m, exact=True)
    rng = make_rng(derive_seed(spec.seed, 1_000_003 + index))
    return characteristic_time_tc(model, m, spec.samples, rng)


def _hit_rate_per_content(spec, threads):
    header = ["beta", "F", "content", "policy", "hit_rate", "stderr", "n", "m", "F_kind", "seed"]
    rows = []
    if spec.F_grid:
        points = [(spec.betas[0], F) for F in spec.F_grid]
    else:
        points = [(beta, None) for beta in spec.betas]
    for index, (beta, F) in enumerate(points):
        profile = spec.profile(spec.n, F)
        model = build_zipf(spec.n, beta)
        F_label = F if F is not None else (spec.freshness.get("F", "profile"))
        kind_label = "uniform" if F is not None else spec.f_kind
        for series in ("LRU", "MLRU"):
            metrics = run(_sim_config(spec, spec.n, spec.m, beta, profile, series, spec.seed),
                          threads=threads)
            rates, se = metrics.hit_rates, metrics.rate_stderr
            for c in spec.contents:
                rows.append([beta, F_label, c, series, rates[c - 1], se[c - 1],
                             spec.n, spec.m, kind_label, spec.seed])
        t_c = _char_time(spec, model, spec.m, index)
        approx = lru_hit_rate_approx(model, profile, t_c)
        for c in spec.contents:
            rows.append([beta, F_label, c, "LRUApprox", approx.rate(c), 0.0,
                         spec.n, spec.m, kind_label, spec.seed])
        log.info("beta=%s F=%s done (t_c=%.3f)", beta, F_label, t_c)
    return header, rows


def _m_for(spec, n):
    if spec.m is not None and not spec.n_grid:
        return spec.m
    if spec.m_scaling == "sqrt":
        return power_scaled(n, 0.5)
    if spec.m_scaling == "log":
        return max(1, math.ceil(math.log(n)))
    return max(1, math.ceil(spec.m_fraction * n - 1e-9))


def _contents_for(spec, n):
    if spec.contents:
        return [c for c in spec.contents if c <= n]
    return sorted({1, max(1, math.ceil(0.1 * n - 1e-9)), n})


def _approx1_error(spec, threads):
    header = ["n", "m", "beta", "content", "mu", "samples", "F_kind", "policy", "seed"]
    rows = []
    ns = spec.n_grid or (spec.n,)
    index = 0
    for n in ns:
        m = _m_for(spec, n)
        for beta in spec.betas:
            model = build_zipf(n, beta)
            for c in _contents_for(spec, n):
                rng = make_rng(derive_seed(spec.seed, index))
                index += 1
                mu = approximation1_error(model, m, c, spec.samples, rng)
                rows.append([n, m, beta, c, mu, spec.samples, "none", "none", spec.seed])
            log.info("n=%d beta=%s done", n, beta)
    return header, rows


def _char_time_cv(spec, threads):
    header = ["n", "m", "m_scaling", "beta", "content", "cv", "mean", "samples",
              "F_kind", "policy", "seed"]
    rows = []
    index = 0
    for n in spec.n_grid:
        m = _m_for(spec, n)
        if m > n - 1:
            raise ConfigError(f"cache size {m} leaves no other contents at n={n}")
        for beta in spec.betas:
            model = build_zipf(n, beta)
            for c in _contents_for(spec, n):
                rng = make_rng(derive_seed(spec.seed, index))
                index += 1
                s = waiting_time_sample(model, m, spec.samples, rng, skip=c)
                rows.append([n, m, spec.m_scaling, beta, c, s.cv, s.mean, spec.samples,
                             "none", "none", spec.seed])
            log.info("n=%d beta=%s done", n, beta)
    return header, rows


def _tail_bounds(spec, threads):
    header = ["n", "m", "delta", "lower_freq", "lower_bound", "upper_freq", "upper_bound",
              "mean", "samples", "beta", "F_kind", "policy", "seed"]
    rows = []
    for index, delta in enumerate(spec.deltas):
        rng = make_rng(derive_seed(spec.seed, index))
        r = empirical_tail_check(spec.n, spec.m, delta, spec.samples, rng)
        rows.append([spec.n, spec.m, delta, r.lower_freq, r.lower_bound, r.upper_freq,
                     r.upper_bound, r.mean, spec.samples, 0.0, "none", "none", spec.seed])
    return header, rows


def _zipf_convergence(spec, threads):
    header = ["n", "m", "beta", "m_exponent", "p_tm_equals_m", "samples", "F_kind",
              "policy", "seed"]
    beta = spec.betas[0]
    rng = make_rng(derive_seed(spec.seed, 0))
    try:
        freqs = zipf_convergence_check(beta, spec.n_grid, spec.m_exponent, spec.samples, rng)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [[n, power_scaled(n, spec.m_exponent), beta, spec.m_exponent, f, spec.samples,
             "none", "none", spec.seed] for n, f in zip(spec.n_grid, freqs)]
    return header, rows


_RUNNERS = {
    Experiment.HIT_VS_BETA: _hit_vs_beta,
    Experiment.HIT_VS_F: _hit_vs_f,
    Experiment.HIT_RATE_PER_CONTENT: _hit_rate_per_content,
    Experiment.APPROX1_ERROR: _approx1_error,
    Experiment.CHAR_TIME_CV: _char_time_cv,
    Experiment.TAIL_BOUNDS: _tail_bounds,
    Experiment.ZIPF_CONVERGENCE: _zipf_convergence,
}


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _plot_script(experiment: Experiment, csv_name: str, series: list,
                 contents: tuple = (), sweep_F: bool = False) -> str:
    x_col, y_col, xlabel, ylabel, key_col = {
        Experiment.HIT_VS_BETA: (1, 3, "Zipf parameter beta", "hit probability", 2),
        Experiment.HIT_VS_F: (1, 3, "freshness F", "hit probability", 2),
        Experiment.HIT_RATE_PER_CONTENT: (1, 5, "Zipf parameter beta", "hit-rate", 4),
        Experiment.APPROX1_ERROR: (4, 5, "content index", "relative error mu", 3),
        Experiment.CHAR_TIME_CV: (1, 6, "number of contents n", "c_v of T_c(i)", 4),
        Experiment.TAIL_BOUNDS: (3, 4, "delta", "lower-tail frequency", 1),
        Experiment.ZIPF_CONVERGENCE: (1, 5, "number of contents n", "P(T_m = m)", 3),
    }[experiment]
    lines = [
        f"# gnuplot script for {csv_name}; run: gnuplot {Path(csv_name).stem}.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(csv_name).stem}.png'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key outside right",
    ]
    if experiment in (Experiment.CHAR_TIME_CV, Experiment.ZIPF_CONVERGENCE):
        lines.append("set logscale x")
    if sweep_F:
        x_col = 2
        lines[4] = "set xlabel 'freshness F'"
    labels = " ".join(str(s) for s in series)
    if experiment is Experiment.HIT_RATE_PER_CONTENT:
        lines.append(f"plot for [p in \"{labels}\"] for [c in \"{' '.join(map(str, contents))}\"] "
                     f"'{csv_name}' every ::1 using {x_col}:(strcol({key_col}) eq p && strcol(3) eq c "
                     f"? ${y_col} : 1/0) with linespoints title p.' C'.c")
    else:
        lines.append(f"plot for [s in \"{labels}\"] '{csv_name}' every ::1 using "
                     f"{x_col}:(strcol({key_col}) eq s ? ${y_col} : 1/0) with linespoints title s")
    return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec, out_dir: Optional[str] = None,
                   threads: int = 1) -> list:
    """Run ``spec`` and write the CSV, a gnuplot script and a manifest.

    Returns the written paths.
    """
    out = output_dir(spec, out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")

    header, rows = _RUNNERS[spec.experiment](spec, threads)
    stem = spec.experiment.stem
    csv_path = out / f"{stem}.csv"
    gp_path = out / f"{stem}.gp"
    manifest_path = out / f"{stem}.manifest.json"

    key_index = header.index("policy")
    if spec.experiment in (Experiment.APPROX1_ERROR, Experiment.CHAR_TIME_CV):
        key_index = header.index("beta")
    if spec.experiment is Experiment.TAIL_BOUNDS:
        key_index = header.index("n")
    if spec.experiment is Experiment.ZIPF_CONVERGENCE:
        key_index = header.index("beta")
    series = list(dict.fromkeys(_fmt(r[key_index]) for r in rows))
    gp = _plot_script(spec.experiment, csv_path.name, series, spec.contents,
                      sweep_F=bool(spec.F_grid) and spec.experiment is Experiment.HIT_RATE_PER_CONTENT)

    csv_path.write_text(render_csv(header, rows))
    gp_path.write_text(gp)
    manifest = {"tool": "freshcache", "version": __version__, "config": spec.resolved(),
                "files": [csv_path.name, gp_path.name], "rows": len(rows)}
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s (%d rows)", csv_path, len(rows))
    return [csv_path, gp_path, manifest_path]
