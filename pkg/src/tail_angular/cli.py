"""Command-line entry point: ``tail-angular <subcommand> ...``.

Exit status is 0 on success, 2 on bad configuration or unreadable input and 3
when the result is infeasible or degenerate.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .bounds import BoundInputs, bound_truncated, bound_untruncated
from .classify import empirical_risk, test_error, train_grid_majority
from .estimators import fit_monte_carlo, from_standardized, truncation_level
from .geometry import Grid, load_class
from .mvset import NON_EXTREME, score_anomalies, solve_mvset, solve_mvset_greedy_cells
from .simgen import PolarSampler, SimSpec, sample
from .transform import fit_ranks, read_dataset, write_dataset

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE = 0, 2, 3


class Degenerate(RuntimeError):
    """Infeasible or degenerate outcome (exit status 3)."""


def _out(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _resolve_M(norms, n: int, k: int, m: float | None, fraction: float | None) -> float | None:
    if m is not None:
        return m
    if fraction is not None:
        return truncation_level(norms, n, k, fraction)
    return None


def cmd_simulate(args) -> None:
    spec = SimSpec(args.d, args.nu, args.n, args.seed, args.labeled, args.nu_minus, args.p)
    path = _out(args, args.name + ".csv")
    write_dataset(sample(spec), path)
    _write_json(path.with_suffix(".json"), {"simspec": spec.to_dict(), "rows": spec.n})
    print(path)


def cmd_truth(args) -> None:
    grid = Grid(args.d, args.tau, args.S)
    masses = fit_monte_carlo(PolarSampler(args.d, args.nu), args.mc_n, grid, seed=args.seed)
    path = _out(args, "truth.csv")
    _write_masses(path, masses)
    _write_json(path.with_suffix(".json"), {"d": args.d, "nu": args.nu, "tau": args.tau, "S": args.S,
                                            "N": args.mc_n, "seed": args.seed, "total": float(masses.sum())})
    print(path)


def _write_masses(path: Path, masses) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["set_id", "mass"])
        for i, m in enumerate(masses):
            w.writerow([i, repr(float(m))])


def cmd_estimate(args) -> None:
    data = read_dataset(args.data, labeled=args.labeled)
    V = fit_ranks(data).transform(data.X)
    k = args.k or ex.sqrt_k(data.n)
    M = _resolve_M(V.max(axis=1), data.n, k, args.m, args.fraction)
    est = from_standardized(V, k, M)
    if args.sets:
        masses = est.masses(load_class(Path(args.sets).read_text()))
    else:
        masses = est.grid_masses(Grid(data.d, args.tau, args.S))
    path = _out(args, "estimate.csv")
    _write_masses(path, masses)
    print(path)


def cmd_sweep(args) -> None:
    cfg = ex.SweepConfig(
        dims=tuple(args.dims), nu=args.nu, n_list=tuple(args.n_list), reps=args.reps, tau=args.tau,
        S=args.S, truncation_fractions=tuple(args.fractions), seed=args.seed, mc_n=args.mc_n,
        mc_seed=args.mc_seed, threads=args.threads,
    )
    rows, meta = ex.run_sweep(cfg)
    path = _out(args, "sweep.csv")
    path.write_text(ex.rows_to_csv(rows))
    meta = {k: v for k, v in meta.items() if k != "raw"}
    _write_json(path.with_suffix(".json"), meta)
    if args.plot:
        plot_sweep(rows, _out(args, "sweep.svg"))
    print(path)


def plot_sweep(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in dict.fromkeys(r.estimator_kind for r in rows):
        sel = [r for r in rows if r.estimator_kind == kind]
        ax.errorbar([r.k for r in sel], [r.mean_sup_error for r in sel],
                    yerr=[r.std_sup_error for r in sel], label=kind, marker="o", capsize=2)
    ks = sorted({r.k for r in rows})
    ax.plot(ks, [1 / (4 * np.sqrt(k)) for k in ks], "k:", label="1/(4 sqrt k)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel("mean sup-error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_bound(args) -> None:
    inp = BoundInputs(n=args.n, k=args.k, d=args.d, delta=args.delta, rho=args.rho, tau=args.tau,
                      c=args.c, C=args.cap_c, vc_dim=args.vc, M=args.m, bias=args.bias)
    rep = bound_truncated(inp) if args.m is not None else bound_untruncated(inp)
    text = json.dumps(rep.to_dict(), indent=2)
    if args.out != ".":
        _out(args, "bound.json").write_text(text + "\n")
    print(text)


def cmd_mvset(args) -> None:
    train = read_dataset(args.train, labeled=args.labeled)
    model = fit_ranks(train)
    V = model.transform(train.X)
    k = args.k or ex.sqrt_k(train.n)
    M = _resolve_M(V.max(axis=1), train.n, k, args.m, args.fraction)
    est = from_standardized(V, k, M)
    if args.psi is not None:
        psi = args.psi
    else:
        inp = BoundInputs(n=train.n, k=k, d=train.d, delta=args.delta, rho=args.rho, tau=args.tau,
                          c=args.c, C=args.cap_c, vc_dim=args.vc, M=M)
        psi = (bound_truncated(inp) if M is not None else bound_untruncated(inp)).total
    if args.sets:
        res = solve_mvset(load_class(Path(args.sets).read_text()), args.alpha, psi, est)
    else:
        res = solve_mvset_greedy_cells(Grid(train.d, args.tau, args.S), args.alpha, psi, est)
    if not res.feasible:
        raise Degenerate(f"no candidate reaches mass {args.alpha} - {psi}")
    _write_json(_out(args, "mvset.json"), {
        "alpha": args.alpha, "psi": psi, "k": k, "M": M, "volume": res.volume, "mass_hat": res.mass_hat,
        "cells": list(res.cells), "index": res.index, "chosen": res.chosen.to_dict(),
    })
    if args.test:
        test = read_dataset(args.test, labeled=args.labeled)
        flags = score_anomalies(res, model, k, test)
        with open(_out(args, "anomalies.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", "extreme", "anomaly"])
            for i, f in enumerate(flags):
                extreme = f != NON_EXTREME
                w.writerow([i, str(extreme).lower(), str(bool(extreme and f)).lower()])
    print(_out(args, "mvset.json"))


def cmd_classify(args) -> None:
    if args.train is None:
        return _classify_experiment(args)
    if args.test is None:
        raise ValueError("--test is required with --train")
    train = read_dataset(args.train, labeled=True)
    test = read_dataset(args.test, labeled=True)
    model = fit_ranks(train)
    k = args.k or ex.sqrt_k(train.n)
    norms = model.transform(train.X).max(axis=1)
    M = _resolve_M(norms, train.n, k, args.m, args.fraction)
    try:
        g = train_grid_majority(model, train, k, args.tau, args.s_grid)
        g_trunc = train_grid_majority(model, train, k, args.tau, args.s_grid, M)
    except ValueError as exc:
        raise Degenerate(str(exc)) from exc
    r_train = empirical_risk(g, model, train, k, args.tau)
    r_train_m = empirical_risk(g_trunc, model, train, k, args.tau, M)
    r_test = test_error(g, model, test, k, args.tau)
    r_test_m = test_error(g_trunc, model, test, k, args.tau)
    test_retained = int(empirical_risk(g, model, test, k, args.tau).retained)
    out = {
        "risk_train": r_train.empirical_risk,
        "risk_test": r_test,
        "risk_test_truncated_model": r_test_m,
        "retained_counts": {"train": r_train.retained, "train_truncated": r_train_m.retained, "test": test_retained},
        "k": k,
        "M": M,
    }
    _write_json(_out(args, "classify.json"), out)
    print(json.dumps(out, indent=2))
    if test_retained == 0:
        raise Degenerate("no test point in the extreme region")


def _classify_experiment(args) -> None:
    cfg = ex.ClassifConfig(d=args.d, nu_plus=args.nu_plus, nu_minus=args.nu_minus, n=args.n, tau=args.tau,
                           S=args.s_grid, fraction=args.fraction or 0.05, reps=args.reps, seed=args.seed,
                           threads=args.threads)
    summary = ex.run_classif_experiment(cfg)
    path = _out(args, "classify_experiment.json")
    path.write_text(ex.summary_json(summary) + "\n")
    print(path)
    if len(summary.degenerate) == cfg.reps:
        raise Degenerate("every replication was degenerate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tail-angular", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help=f"worker threads (overridden by ${ex.THREADS_ENV})")
    p.add_argument("--out", default=".", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw a Pareto x Dirichlet sample")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--labeled", action="store_true")
    s.add_argument("--nu-minus", type=float)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--name", default="data")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("truth", help="Monte Carlo cell masses of the simulation model")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--tau", type=float, default=0.1)
    s.add_argument("--S", type=int, default=5)
    s.add_argument("--mc-n", type=int, default=10_000_000)
    s.set_defaults(func=cmd_truth)

    s = sub.add_parser("estimate", help="empirical or truncated angular masses from a CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--labeled", action="store_true", help="input has a trailing label column")
    s.add_argument("--k", type=int, help="default floor(sqrt(n))")
    s.add_argument("--tau", type=float, default=0.1)
    s.add_argument("--S", type=int, default=5)
    s.add_argument("--sets", help="JSON array of sets instead of the grid")
    _truncation_flags(s, default_fraction=None)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="sup-error sweep against Monte Carlo truth")
    s.add_argument("--dims", type=int, nargs="+", default=[2])
    s.add_argument("--nu", type=float, default=10.0)
    s.add_argument("--n-list", type=int, nargs="+", default=[5_000, 10_000, 50_000, 100_000])
    s.add_argument("--reps", type=int, default=20)
    s.add_argument("--tau", type=float, default=0.1)
    s.add_argument("--S", type=int, default=5)
    s.add_argument("--fractions", type=float, nargs="+", default=[0.10, 0.05, 0.02])
    s.add_argument("--mc-n", type=int, default=10_000_000)
    s.add_argument("--mc-seed", type=int, default=12345)
    s.add_argument("--plot", action="store_true", help="also write sweep.svg (needs matplotlib)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("bound", help="evaluate the concentration bound")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--tau", type=float, required=True)
    _bound_constants(s)
    s.add_argument("--m", type=float)
    s.add_argument("--bias", type=float, default=0.0)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("mvset", help="minimum-volume angular set and anomaly flags")
    s.add_argument("--train", required=True)
    s.add_argument("--test")
    s.add_argument("--labeled", action="store_true", help="inputs have a trailing label column")
    s.add_argument("--k", type=int)
    s.add_argument("--tau", type=float, default=0.1)
    s.add_argument("--S", type=int, default=5)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--psi", type=float, help="tolerance; derived from the bound when omitted")
    s.add_argument("--sets", help="JSON array of candidate sets instead of grid-cell unions")
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--rho", type=float, default=0.05)
    _bound_constants(s)
    _truncation_flags(s, default_fraction=None)
    s.set_defaults(func=cmd_mvset)

    s = sub.add_parser("classify", help="angular grid classifier (files, or a simulated experiment)")
    s.add_argument("--train")
    s.add_argument("--test")
    s.add_argument("--k", type=int)
    s.add_argument("--tau", type=float, default=0.1)
    s.add_argument("--s-grid", type=int, default=2)
    _truncation_flags(s, default_fraction=0.05)
    s.add_argument("--d", type=int, default=5)
    s.add_argument("--nu-plus", type=float, default=1.0)
    s.add_argument("--nu-minus", type=float, default=2.0)
    s.add_argument("--n", type=int, default=20_000)
    s.add_argument("--reps", type=int, default=30)
    s.set_defaults(func=cmd_classify)
    return p


def _truncation_flags(s, default_fraction) -> None:
    g = s.add_mutually_exclusive_group()
    g.add_argument("--m", type=float, help="truncation level M > 1")
    g.add_argument("--fraction", type=float, default=default_fraction,
                   help="discard this fraction of the largest retained norms")


def _bound_constants(s) -> None:
    s.add_argument("--c", type=float, default=1.0, help="hull-gap constant")
    s.add_argument("--cap-c", type=float, default=1.0, help="universal constant C")
    s.add_argument("--vc", type=float, default=1.0, help="VC dimension")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "m", None) is not None and args.command != "bound":
        args.fraction = None
    try:
        args.func(args)
    except Degenerate as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
