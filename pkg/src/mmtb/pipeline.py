"""Fit orchestration: slicing by mode, parallel chains, sample file layout."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import EmptyChain, IncompatibleChains, IoError
from .sampler import run_chain
from .tensor_io import (DataTensor, Mode, RunConfig, SampleChain, apply_mode, read_samples,
                        write_samples)

JOBS_ENV = "MMTB_JOBS"
SAMPLE_SUFFIX = ".ndjson"


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _slice_tag(context: dict) -> str:
    if "subject" in context:
        return f"subject{context['subject'] + 1}_"
    if "time" in context:
        return f"time{context['time'] + 1}_"
    return ""


def _run_task(task):
    values, config, seed, context = task
    chain = run_chain(DataTensor(values), config, seed=seed)
    chain.context = context
    return chain


def run_fit(data: DataTensor, config: RunConfig, jobs: int = 1) -> list[SampleChain]:
    """Run ``config.n_chains`` chains per mode slice.

    Chain ``j`` uses seed ``config.seed + j``; results come back in task order
    whatever ``jobs`` is, so outputs do not depend on scheduling.
    """
    tasks = []
    for ctx, (piece, base) in enumerate(apply_mode(data, config.mode)):
        for j in range(config.n_chains):
            context = dict(base, chain=j, slice=ctx)
            tasks.append((piece.values, config, config.seed + j, context))
    if jobs <= 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_run_task, tasks))


def write_fit(chains: list[SampleChain], samples_dir) -> list[Path]:
    out = Path(samples_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for ch in chains:
        path = out / f"{_slice_tag(ch.context)}chain{ch.context['chain'] + 1}{SAMPLE_SUFFIX}"
        try:
            write_samples(ch, path)
        except OSError as exc:
            raise IoError(f"{path}: {exc}") from exc
        paths.append(path)
    return paths


def sample_files(inputs) -> list[Path]:
    """Expand directories (a fit output or its ``samples/``) into sample files."""
    files = []
    for p in map(Path, inputs):
        if p.is_dir():
            sub = p / "samples" if (p / "samples").is_dir() else p
            files.extend(sorted(sub.glob(f"*{SAMPLE_SUFFIX}")))
        elif p.exists():
            files.append(p)
        else:
            raise IoError(f"{p}: no such file or directory")
    if not files:
        raise EmptyChain(f"no sample files found in {', '.join(map(str, inputs))}")
    return files


def load_groups(inputs) -> list[tuple[dict, list[SampleChain]]]:
    """Read sample files and pool chains by mode slice.

    Returns ``(context, chains)`` per slice, ordered by slice.  Chains within
    a slice must agree on every latent dimension.
    """
    groups: dict[int, tuple[dict, list]] = {}
    for path in sample_files(inputs):
        try:
            ch = read_samples(path)
        except OSError as exc:
            raise IoError(f"{path}: {exc}") from exc
        ctx = dict(ch.context) or {"mode": Mode.MMTB.value}
        key = int(ctx.get("slice", 0))
        ctx.pop("chain", None)
        if key in groups and groups[key][0].get("mode") != ctx.get("mode"):
            raise IncompatibleChains(f"{path}: mode {ctx.get('mode')} differs from other chains")
        groups.setdefault(key, (ctx, []))[1].append(ch)
    for ctx, chains in groups.values():
        ref = _dims(chains[0])
        for ch in chains[1:]:
            if _dims(ch) != ref:
                raise IncompatibleChains(f"chain dimensions {_dims(ch)} differ from {ref}")
    return [groups[k] for k in sorted(groups)]


def _dims(chain: SampleChain) -> tuple:
    d = chain.draws[0]
    return (len(d.s),) + tuple(d.c.shape) + (len(d.theta.mu),)


def pooled_draws(chains: list[SampleChain]) -> list:
    return [d for ch in chains for d in ch.draws]


def diagnostics_report(chains: list[SampleChain]) -> dict:
    out = []
    for ch in chains:
        diag = ch.diagnostics
        trace = np.asarray(diag.log_posterior_trace, dtype=float)
        out.append({
            "context": ch.context,
            "n_draws": len(ch),
            "acceptance_rate": {k: diag.acceptance_rate(k) for k in diag.acceptance},
            "acceptance": diag.acceptance,
            "log_posterior_trace": trace.tolist(),
        })
    return {"chains": out}
