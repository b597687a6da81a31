"""Command line front-end: ``mmtb <command> [flags]``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 runtime error.
Errors print a single line ``error: <Code>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import figures
from .errors import ConfigError, IoError, MMTBError
from .evaluation import (METRICS, blocked_dominance, compare_replicate, comparison_bands,
                         comparison_rows, default_hyperparameters, evaluate_fit)
from .pipeline import (default_jobs, diagnostics_report, load_groups, pooled_draws, run_fit,
                       write_fit)
from .simulator import Scenario, read_truth, simulate_to_dir
from .summaries import summarize
from .tensor_io import Mode, RunConfig, load_config, read_long_csv, save_config

log = logging.getLogger("mmtb")

BINDER_SWEEP = tuple(np.round(np.linspace(1.1, 1.9, 9), 10))


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _layout(out) -> dict[str, Path]:
    root = Path(out)
    dirs = {name: root / name for name in ("samples", "summaries", "figures", "metrics")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    return dirs


def _write_json(obj, path) -> None:
    try:
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                              encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _write_matrix(M, path, header=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in np.atleast_2d(M):
            w.writerow([repr(float(x)) for x in row])


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    paths = simulate_to_dir(Scenario.parse(args.scenario), args.seed, args.replicates,
                            args.out_dir)
    for p in paths:
        print(p)
    return 0


def _fit_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig(default_hyperparameters())
    overrides = {
        "mode": args.mode, "n_chains": args.chains, "n_iterations": args.iterations,
        "burn_in": args.burn_in, "seed": args.seed, "thinning": args.thinning,
        "sampler": args.sampler,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    hp_over = {k: getattr(args, k) for k in ("Z", "K") if getattr(args, k) is not None}
    if hp_over:
        overrides["hyperparameters"] = replace(cfg.hyperparameters, **hp_over)
    if "n_iterations" in overrides and "burn_in" not in overrides:
        overrides["burn_in"] = overrides["n_iterations"] // 2
    try:
        return replace(cfg, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_fit(args) -> int:
    data = read_long_csv(args.data)
    cfg = _fit_config(args)
    dirs = _layout(args.out)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    chains = run_fit(data, cfg, jobs=jobs)
    for p in write_fit(chains, dirs["samples"]):
        print(p)
    save_config(cfg, Path(args.out) / "config.json")
    _write_json(diagnostics_report(chains), dirs["metrics"] / "diagnostics.json")
    return 0


def cmd_summarize(args) -> int:
    groups = load_groups(args.samples)
    dirs = _layout(args.out)
    a_values = list(BINDER_SWEEP) if args.binder_sweep else list(args.binder_a)
    sweep = len(a_values) > 1
    overview = []
    for ctx, chains in groups:
        draws = pooled_draws(chains)
        tag = "".join(f"{k}{ctx[k] + 1}_" for k in ("subject", "time") if k in ctx)
        for a in a_values:
            rep = summarize(draws, a=float(a), b=args.binder_b, n_restarts=args.restarts)
            rep.extra = {"context": ctx, "n_draws": len(draws), "n_chains": len(chains)}
            prefix = tag + (f"a{a:g}_b{args.binder_b:g}_" if sweep else "")
            _write_json(rep.to_dict(), dirs["summaries"] / f"{prefix}summary.json")
            overview.append({"context": ctx, "binder_a": float(a), "binder_b": args.binder_b,
                             "n_profiles": rep.subject_partition.n_clusters,
                             "subject_partition": (rep.subject_partition.canonical() + 1).tolist()})
            _write_matrix(rep.coclustering, dirs["summaries"] / f"{prefix}coclustering.csv")
            for p, M in rep.profile_location_sequences.items():
                _write_matrix(M, dirs["summaries"] / f"{prefix}profile{p + 1}_locations.csv")
                _write_matrix(rep.changepoint_probabilities[p],
                              dirs["summaries"] / f"{prefix}profile{p + 1}_changepoints.csv")
            figures.coclustering_heatmap(rep.coclustering, rep.subject_partition.labels,
                                         dirs["figures"] / f"{prefix}coclustering.svg")
            figures.location_sequences(rep.profile_location_sequences,
                                       rep.changepoint_probabilities,
                                       dirs["figures"] / f"{prefix}locations.svg")
        figures.traceplot([ch.diagnostics.log_posterior_trace for ch in chains],
                          dirs["figures"] / f"{tag}trace.svg")
    _write_json({"summaries": overview}, dirs["summaries"] / "overview.json")
    for row in overview:
        print(f"a={row['binder_a']:g} b={row['binder_b']:g} profiles={row['n_profiles']} "
              f"partition={row['subject_partition']}")
    return 0


def cmd_evaluate(args) -> int:
    truth = read_truth(args.truth)
    groups = [(ctx, pooled_draws(chains)) for ctx, chains in load_groups(args.samples)]
    metrics = evaluate_fit(groups, truth)
    dirs = _layout(args.out)
    _write_json(metrics, dirs["metrics"] / "metrics.json")
    print(json.dumps(metrics, sort_keys=True))
    return 0


def _compare_task(task):
    scenario, seed, rep, iterations = task
    return compare_replicate(scenario, seed, rep, iterations)


def cmd_compare_samplers(args) -> int:
    dirs = _layout(args.out)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    tasks = [(args.scenario, args.seed, rep, args.iterations)
             for rep in range(1, args.replicates + 1)]
    if jobs <= 1 or len(tasks) == 1:
        results = [_compare_task(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_compare_task, tasks))
    runs = [r for rr in results for r in rr]
    fields = ["replicate", "sampler", "iteration", *METRICS]
    with open(dirs["metrics"] / "compare_samplers.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in comparison_rows(runs):
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    bands = comparison_bands(runs)
    with open(dirs["metrics"] / "compare_bands.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sampler", "metric", "iteration", "mean", "q05", "q95"])
        for (s, m), (mean, lo, hi) in bands.items():
            for it in range(len(mean)):
                w.writerow([s, m, it + 1, repr(float(mean[it])), repr(float(lo[it])),
                            repr(float(hi[it]))])
    dominance = blocked_dominance(runs)
    _write_json({"blocked_better_fraction": dominance, "replicates": args.replicates,
                 "iterations": args.iterations, "scenario": Scenario.parse(args.scenario).value},
                dirs["metrics"] / "compare_summary.json")
    figures.comparison_bands(bands, dirs["figures"] / "compare_samplers.svg")
    print(json.dumps({"blocked_better_fraction": dominance}, sort_keys=True))
    return 0


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmtb", description="Multi-subject temporal biclustering sampler.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="write benchmark scenario replicates")
    s.add_argument("--scenario", required=True, help="time_dep | subject_dep | both (or 1/2/3)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="run MCMC chains on a long-format CSV")
    f.add_argument("--data", required=True)
    f.add_argument("--config", help="JSON run configuration; flags override its fields")
    f.add_argument("--mode", choices=[m.value for m in Mode])
    f.add_argument("--chains", type=int)
    f.add_argument("--iterations", type=int)
    f.add_argument("--burn-in", type=int)
    f.add_argument("--thinning", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--sampler", choices=["blocked", "marginal"])
    f.add_argument("--Z", type=int, help="maximum number of profiles")
    f.add_argument("--K", type=int, help="maximum number of states")
    f.add_argument("--jobs", type=int, help="parallel chains (default: $MMTB_JOBS or 1)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("summarize", help="point estimates, matrices and figures")
    m.add_argument("--samples", nargs="+", required=True,
                   help="sample files or fit output directories")
    m.add_argument("--binder-a", type=float, nargs="+", default=[1.0])
    m.add_argument("--binder-b", type=float, default=1.0)
    m.add_argument("--binder-sweep", action="store_true",
                   help="use nine values of a evenly spaced over [1.1, 1.9]")
    m.add_argument("--restarts", type=int, default=16)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_summarize)

    e = sub.add_parser("evaluate", help="score a fit against simulation ground truth")
    e.add_argument("--samples", nargs="+", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare-samplers", help="blocked versus marginal sequence updates")
    c.add_argument("--scenario", default="both")
    c.add_argument("--replicates", type=int, default=1)
    c.add_argument("--iterations", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--jobs", type=int)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare_samplers)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        for name in ("replicates", "iterations", "chains"):
            v = getattr(args, name, None)
            if v is not None and v < 1:
                raise UsageError(f"--{name} must be positive")
        return args.func(args)
    except MMTBError as exc:
        code = "UsageError" if isinstance(exc, UsageError) else exc.code
        print(f"error: {code}: {_one_line(exc)}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: ConfigError: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {_one_line(exc)}", file=sys.stderr)
        return 3


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
