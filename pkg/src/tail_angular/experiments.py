"""Simulation sweeps: sup-error of the estimators against Monte Carlo truth, and
truncated vs untruncated extreme-region classification."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import kstwobign

from .classify import empirical_risk, test_error, train_grid_majority
from .estimators import fit_monte_carlo, from_standardized, truncation_level
from .geometry import Grid
from .simgen import PolarSampler, SimMargins, SimSpec, sample
from .transform import fit_ranks

THREADS_ENV = "TAIL_ANGULAR_THREADS"


def resolve_threads(threads: int | None) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, threads or 1)


def sqrt_k(n: int) -> int:
    return math.isqrt(n)


def _seed_for(root: int, *key: int) -> int:
    return int(np.random.SeedSequence([root, *key]).generate_state(1, np.uint64)[0])


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value is the Kolmogorov survival function at ``sqrt(n m / (n + m)) D``.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    D = float(np.max(np.abs(Fa - Fb)))
    if D == 0.0:
        return 0.0, 1.0
    en = a.size * b.size / (a.size + b.size)
    return D, float(min(1.0, kstwobign.sf(math.sqrt(en) * D)))


@dataclass(frozen=True)
class SweepConfig:
    dims: tuple = (2,)
    nu: float = 10.0
    n_list: tuple = (5_000, 10_000, 50_000, 100_000)
    reps: int = 20
    tau: float = 0.1
    S: int = 5
    truncation_fractions: tuple = (0.10, 0.05, 0.02)
    seed: int = 0
    k_rule: str = "sqrt"
    mc_n: int = 10_000_000
    mc_seed: int = 12345
    threads: int = 1

    def __post_init__(self):
        if list(self.n_list) != sorted(self.n_list):
            raise ValueError("n_list must be ascending")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.k_rule != "sqrt":
            raise ValueError("only the 'sqrt' k rule is supported")


@dataclass(frozen=True)
class SweepRow:
    estimator_kind: str
    d: int
    n: int
    k: int
    mean_sup_error: float
    std_sup_error: float
    reference: float


_TRUTH_CACHE: dict = {}


def mc_truth(d: int, nu: float, grid: Grid, N: int, seed: int) -> np.ndarray:
    """Monte Carlo cell masses, cached per ``(d, nu, grid, N, seed)``."""
    key = (d, float(nu), grid.tau, grid.bins, N, seed)
    if key not in _TRUTH_CACHE:
        _TRUTH_CACHE[key] = fit_monte_carlo(PolarSampler(d, nu), N, grid, seed=seed)
    return _TRUTH_CACHE[key]


def estimator_kinds(cfg: SweepConfig) -> list[str]:
    return ["empirical", *[f"truncated_{round(100 * f)}" for f in cfg.truncation_fractions], "oracle"]


def sup_errors_once(d: int, nu: float, n: int, seed: int, grid: Grid, truth: np.ndarray,
                    fractions: Sequence[float]) -> dict[str, float]:
    """One replication: sup over grid cells of ``|estimate - truth|`` for every estimator."""
    spec = SimSpec(d=d, nu=nu, n=n, seed=seed)
    X = sample(spec).X
    k = sqrt_k(n)
    V = fit_ranks(X).transform(X)
    out = {}
    emp = from_standardized(V, k)
    out["empirical"] = float(np.max(np.abs(emp.grid_masses(grid) - truth)))
    for f in fractions:
        M = truncation_level(emp.norms, n, k, f)
        tr = from_standardized(V, k, M)
        out[f"truncated_{round(100 * f)}"] = float(np.max(np.abs(tr.grid_masses(grid) - truth)))
    orc = from_standardized(SimMargins.for_spec(spec).standardize(X), k, kind="oracle")
    out["oracle"] = float(np.max(np.abs(orc.grid_masses(grid) - truth)))
    return out


def run_sweep(cfg: SweepConfig) -> tuple[list[SweepRow], dict]:
    """Mean/std sup-errors per ``(d, n, estimator)``; returns rows and a provenance dict."""
    kinds = estimator_kinds(cfg)
    rows: list[SweepRow] = []
    raw: dict = {}
    threads = resolve_threads(cfg.threads)
    for d in cfg.dims:
        grid = Grid(d, cfg.tau, cfg.S)
        truth = mc_truth(d, cfg.nu, grid, cfg.mc_n, cfg.mc_seed)
        for n in cfg.n_list:
            seeds = [_seed_for(cfg.seed, d, n, rep) for rep in range(cfg.reps)]
            job = lambda s: sup_errors_once(d, cfg.nu, n, s, grid, truth, cfg.truncation_fractions)
            if threads > 1:
                with ThreadPoolExecutor(threads) as pool:
                    results = list(pool.map(job, seeds))
            else:
                results = [job(s) for s in seeds]
            k = sqrt_k(n)
            for kind in kinds:
                errs = np.array([r[kind] for r in results])
                raw[(kind, d, n)] = errs
                std = float(errs.std(ddof=1)) if errs.size > 1 else 0.0
                rows.append(SweepRow(kind, d, n, k, float(errs.mean()), std, 1.0 / (4.0 * math.sqrt(k))))
    meta = {"config": asdict(cfg), "mc_truth": {"N": cfg.mc_n, "seed": cfg.mc_seed, "shared_across_reps": True}}
    return rows, meta | {"raw": raw}


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    fields = list(SweepRow.__dataclass_fields__)
    w.writerow(fields)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return buf.getvalue()


def log_slope(ks: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of ``log(err)`` on ``log(k)``."""
    return float(np.polyfit(np.log(ks), np.log(errs), 1)[0])


@dataclass(frozen=True)
class ClassifConfig:
    d: int = 5
    nu_plus: float = 1.0
    nu_minus: float = 2.0
    n: int = 20_000
    n_test: int | None = None
    tau: float = 0.1
    S: int = 2
    fraction: float = 0.05
    reps: int = 30
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")


@dataclass
class ClassifSummary:
    errors_full: list = field(default_factory=list)
    errors_truncated: list = field(default_factory=list)
    risk_train: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    ks_statistic: float = float("nan")
    ks_pvalue: float = float("nan")
    mean_abs_diff: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def classif_once(cfg: ClassifConfig, rep: int) -> tuple[float, float, float, str | None]:
    k = sqrt_k(cfg.n)
    n_test = cfg.n_test or cfg.n
    train = sample(SimSpec(cfg.d, cfg.nu_plus, cfg.n, _seed_for(cfg.seed, 0, rep), True, cfg.nu_minus))
    test = sample(SimSpec(cfg.d, cfg.nu_plus, n_test, _seed_for(cfg.seed, 1, rep), True, cfg.nu_minus))
    model = fit_ranks(train)
    norms = model.transform(train.X).max(axis=1)
    try:
        M = truncation_level(norms, cfg.n, k, cfg.fraction)
        g_full = train_grid_majority(model, train, k, cfg.tau, cfg.S)
        g_trunc = train_grid_majority(model, train, k, cfg.tau, cfg.S, M)
    except ValueError as exc:
        return math.nan, math.nan, math.nan, str(exc)
    e_full = test_error(g_full, model, test, k, cfg.tau)
    e_trunc = test_error(g_trunc, model, test, k, cfg.tau)
    r_train = empirical_risk(g_full, model, train, k, cfg.tau).empirical_risk
    note = "empty test index set" if math.isnan(e_full) else None
    return e_full, e_trunc, r_train, note


def run_classif_experiment(cfg: ClassifConfig) -> ClassifSummary:
    threads = resolve_threads(cfg.threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda r: classif_once(cfg, r), range(cfg.reps)))
    else:
        results = [classif_once(cfg, r) for r in range(cfg.reps)]
    out = ClassifSummary()
    for rep, (ef, et, rt, note) in enumerate(results):
        out.errors_full.append(ef)
        out.errors_truncated.append(et)
        out.risk_train.append(rt)
        if note:
            out.degenerate.append({"rep": rep, "reason": note})
    ef = np.array(out.errors_full)
    et = np.array(out.errors_truncated)
    ok = ~(np.isnan(ef) | np.isnan(et))
    if ok.any():
        out.mean_abs_diff = float(np.mean(np.abs(ef[ok] - et[ok])))
        out.ks_statistic, out.ks_pvalue = ks_two_sample(ef[ok], et[ok])
    return out


def summary_json(summary: ClassifSummary) -> str:
    return json.dumps(summary.to_dict(), indent=2, allow_nan=True)
