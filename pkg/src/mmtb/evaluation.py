"""Evaluation against simulation ground truth and the sampler comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .model import Hyperparameters, NormalInvGamma, observation_loglik
from .sampler import run_chain
from .simulator import GroundTruth, Scenario, replicate_seed, simulate_scenario
from .summaries import (_pair_disagreement, binder_loss, evaluate_draws,
                        f_measure_changepoints)
from .tensor_io import Mode, RunConfig

METRICS = ("bl", "mae", "f_measure", "loglik")


def default_hyperparameters(**overrides) -> Hyperparameters:
    """Settings used for the simulation benchmarks (K=20 states, Z=6 profiles)."""
    kw = dict(Z=6, K=20, b1=50.0, b2=100.0, d1=50.0, d2=100.0, phi=0.5, alpha=10.0, beta=2.0,
              likelihood=NormalInvGamma(mu0=0.0, sigma0_sq=5.0, shape=30.0, scale=30.0))
    kw.update(overrides)
    return Hyperparameters(**kw)


def state_metrics(y: np.ndarray, state, truth: GroundTruth, hp: Hyperparameters) -> dict:
    """Metrics of a single configuration: measurement-partition BL, location
    MAE, changepoint f-measure (per subject, averaged) and log-likelihood."""
    cells = state.c[state.s]                       # (N, R, T)
    if cells.shape != truth.true_c.shape:
        raise ShapeMismatch(f"state implies {cells.shape}, truth is {truth.true_c.shape}")
    fresh = 1 - state.gamma[state.s]
    cp = truth.true_changepoints()
    return {
        "bl": float(np.mean(_pair_disagreement(cells, truth.true_c))),
        "mae": float(np.mean(np.abs(state.theta.mu[cells] - truth.true_means))),
        "f_measure": float(np.mean([f_measure_changepoints(fresh[i], cp[i])
                                    for i in range(len(cells))])),
        "loglik": observation_loglik(y, state, hp.likelihood),
    }


@dataclass
class ComparisonRun:
    replicate: int
    sampler: str
    traces: dict          # metric -> (n_iterations,) array


def compare_replicate(scenario, seed: int, replicate: int, n_iterations: int,
                      hp: Hyperparameters | None = None,
                      samplers=("blocked", "marginal")) -> list[ComparisonRun]:
    """Run each sampler from the same initial configuration on one replicate."""
    hp = hp or default_hyperparameters()
    rseed = replicate_seed(seed, replicate)
    data, truth = simulate_scenario(scenario, rseed)
    runs = []
    for name in samplers:
        cfg = RunConfig(hp, n_iterations=n_iterations, burn_in=0, n_chains=1, seed=rseed,
                        sampler=name)
        traces = {m: np.empty(n_iterations) for m in METRICS}

        def record(it, state, traces=traces):
            for m, v in state_metrics(data.values, state, truth, hp).items():
                traces[m][it] = v

        run_chain(data, cfg, callback=record, keep_draws=False)
        runs.append(ComparisonRun(replicate, name, traces))
    return runs


def comparison_rows(runs: list[ComparisonRun]) -> list[dict]:
    rows = []
    for run in runs:
        n = len(run.traces[METRICS[0]])
        for it in range(n):
            row = {"replicate": run.replicate, "sampler": run.sampler, "iteration": it + 1}
            row.update({m: float(run.traces[m][it]) for m in METRICS})
            rows.append(row)
    return rows


def comparison_bands(runs: list[ComparisonRun], level: float = 0.9) -> dict:
    """Per sampler and metric: mean and central ``level`` interval over replicates."""
    lo, hi = (1 - level) / 2, 1 - (1 - level) / 2
    out = {}
    for name in sorted({r.sampler for r in runs}, key=lambda s: s != "blocked"):
        for m in METRICS:
            x = np.stack([r.traces[m] for r in runs if r.sampler == name])
            out[name, m] = (x.mean(axis=0), np.quantile(x, lo, axis=0), np.quantile(x, hi, axis=0))
    return out


def blocked_dominance(runs: list[ComparisonRun]) -> dict:
    """Fraction of replicates where blocked beats marginal at the final iteration."""
    final = {(r.replicate, r.sampler): {m: r.traces[m][-1] for m in METRICS} for r in runs}
    reps = sorted({r.replicate for r in runs})
    better = {"bl": np.less, "mae": np.less, "f_measure": np.greater, "loglik": np.greater}
    return {m: float(np.mean([better[m](final[i, "blocked"][m], final[i, "marginal"][m])
                              for i in reps])) for m in METRICS}


# ------------------------------------------------------------- mode evaluation

def slice_truth(truth: GroundTruth, context: dict) -> GroundTruth:
    """Ground truth restricted to the slice a baseline fit was run on."""
    mode = Mode.parse(context.get("mode", "mmtb"))
    if mode is Mode.SMTC:
        i = context["subject"]
        sel = (slice(i, i + 1), slice(None), slice(None))
        part = np.zeros(1, dtype=np.int64)
    elif mode is Mode.MMB:
        t = context["time"]
        sel = (slice(None), slice(None), slice(t, t + 1))
        part = truth.subject_partition
    else:
        return truth
    gamma = truth.true_gamma[sel].copy()
    gamma[:, :, 0] = 0
    return GroundTruth(part, truth.true_c[sel], gamma, truth.true_means[sel],
                       truth.state_means, truth.state_sds, truth.scenario)


def evaluate_fit(groups: list[tuple[dict, list]], truth: GroundTruth) -> dict:
    """Metrics for a fit produced by any mode.

    ``groups`` holds ``(context, pooled draws)`` per slice.  MMTB is scored
    directly.  SMTC scores each subject's fit against that subject and
    reports the all-singletons subject partition.  MMB averages per-time-step
    scores over time.  The time-collapsed modes only have a subject partition
    to score.
    """
    mode = Mode.parse(groups[0][0].get("mode", "mmtb"))
    if mode is Mode.MMTB:
        out = evaluate_draws(groups[0][1], truth)
    elif mode in (Mode.SMTC, Mode.MMB):
        per = [evaluate_draws(draws, slice_truth(truth, ctx)) for ctx, draws in groups]
        out = {k: float(np.mean([p[k] for p in per])) for k in per[0]}
        if mode is Mode.SMTC:
            out["subject_bl"] = binder_loss(truth.subject_partition,
                                            np.arange(len(truth.subject_partition)),
                                            normalize=True)
        else:
            out["f_measure"] = float("nan")   # a single time step has no changepoints
    else:
        est = evaluate_draws(groups[0][1], GroundTruth(
            truth.subject_partition, truth.true_c[:, :, :1], np.zeros_like(truth.true_gamma[:, :, :1]),
            truth.true_means.mean(axis=2, keepdims=True), truth.state_means, truth.state_sds))
        out = {"subject_bl": est["subject_bl"], "measurement_bl": float("nan"),
               "mae": float("nan"), "f_measure": float("nan")}
    out["mode"] = mode.value
    return out


__all__ = ["state_metrics", "compare_replicate", "comparison_rows", "comparison_bands",
           "blocked_dominance", "evaluate_fit", "slice_truth", "default_hyperparameters",
           "Scenario"]
