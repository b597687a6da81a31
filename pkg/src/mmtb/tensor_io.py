"""Observation container, on-disk formats and posterior sample serialization."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (ConfigError, DuplicateCell, EmptyChain, MalformedHeader, MalformedRow,
                     MissingCell, NonFiniteValue)
from .model import Hyperparameters, ModelState, StateParameters

CSV_HEADER = ["subject", "measurement", "time", "value"]


@dataclass(frozen=True)
class DataTensor:
    """Observations ``Y[i, r, t]`` stored as an (N, R, T) float array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or min(v.shape) < 1:
            raise ValueError(f"expected a non-empty 3-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("tensor contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_subjects(self) -> int:
        return self.values.shape[0]

    @property
    def n_measurements(self) -> int:
        return self.values.shape[1]

    @property
    def n_timesteps(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


class Mode(str, enum.Enum):
    MMTB = "mmtb"
    SMTC = "smtc"
    MMB = "mmb"
    MEAN_MMB = "mean_mmb"
    MEDIAN_MMB = "median_mmb"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for m in cls:
            if m.value == key or m.name.lower() == key:
                return m
        raise ConfigError(f"unknown mode {value!r}")


@dataclass(frozen=True)
class RunConfig:
    hyperparameters: Hyperparameters
    n_iterations: int = 10_000
    burn_in: int = 5_000
    n_chains: int = 3
    seed: int = 0
    thinning: int = 1
    mode: Mode = Mode.MMTB
    sampler: str = "blocked"
    init_mu: tuple[float, ...] | None = None
    init: str = "prior"
    profile_update: str = "collapsed"

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.n_iterations < 1:
            raise ConfigError("n_iterations must be positive")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < n_iterations")
        if self.thinning < 1:
            raise ConfigError("thinning must be >= 1")
        if self.n_chains < 1:
            raise ConfigError("n_chains must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.sampler not in ("blocked", "marginal"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.profile_update not in ("collapsed", "conditional"):
            raise ConfigError(f"unknown profile_update {self.profile_update!r}")
        if self.init not in ("prior", "informed"):
            raise ConfigError(f"unknown init scheme {self.init!r}")
        if self.init_mu is not None:
            object.__setattr__(self, "init_mu", tuple(float(m) for m in self.init_mu))
            if len(self.init_mu) != self.hyperparameters.K:
                raise ConfigError("init_mu must have one entry per state (K)")

    @property
    def n_draws(self) -> int:
        return (self.n_iterations - self.burn_in) // self.thinning

    def to_dict(self) -> dict:
        return {
            "hyperparameters": self.hyperparameters.to_dict(),
            "n_iterations": self.n_iterations,
            "burn_in": self.burn_in,
            "n_chains": self.n_chains,
            "seed": self.seed,
            "thinning": self.thinning,
            "mode": self.mode.value,
            "sampler": self.sampler,
            "init_mu": None if self.init_mu is None else list(self.init_mu),
            "init": self.init,
            "profile_update": self.profile_update,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        try:
            hp = Hyperparameters.from_dict(d.pop("hyperparameters"))
            return cls(hyperparameters=hp, **d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> RunConfig:
    """Read a JSON config file mirroring :class:`RunConfig`."""
    try:
        with open(path, encoding="utf-8") as fh:
            return RunConfig.from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- long CSV

def read_long_csv(path) -> DataTensor:
    """Read a ``subject,measurement,time,value`` file into a tensor.

    Indices on disk are 1-based; every (i, r, t) cell must appear exactly once.
    """
    cells: dict[tuple[int, int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise MalformedHeader(f"row 1: expected header {','.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(f"row {lineno}: expected 4 fields, got {len(row)}")
            try:
                idx = tuple(int(x) for x in row[:3])
            except ValueError:
                raise MalformedRow(f"row {lineno}: indices must be integers: {row[:3]}") from None
            if min(idx) < 1:
                raise MalformedRow(f"row {lineno}: indices are 1-based, got {idx}")
            try:
                value = float(row[3])
            except ValueError:
                raise NonFiniteValue(f"row {lineno}: value {row[3]!r} is not a number") from None
            if not math.isfinite(value):
                raise NonFiniteValue(f"row {lineno}: value {row[3]!r} is not finite")
            if idx in cells:
                raise DuplicateCell(f"row {lineno}: cell {idx} listed more than once")
            cells[idx] = value
    if not cells:
        raise MissingCell("file contains no observations")
    dims = tuple(max(k[d] for k in cells) for d in range(3))
    values = np.empty(dims)
    for i in range(dims[0]):
        for r in range(dims[1]):
            for t in range(dims[2]):
                key = (i + 1, r + 1, t + 1)
                if key not in cells:
                    raise MissingCell(f"cell {key} (subject,measurement,time) is missing")
                values[i, r, t] = cells[key]
    return DataTensor(values)


def write_long_csv(data: DataTensor, path) -> None:
    N, R, T = data.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(N):
            for r in range(R):
                for t in range(T):
                    w.writerow([i + 1, r + 1, t + 1, repr(float(data.values[i, r, t]))])


# -------------------------------------------------------------------- modes

def apply_mode(data: DataTensor, mode) -> list[tuple[DataTensor, dict]]:
    """Slice or collapse ``data`` for the baseline fitting modes.

    Returns ``(tensor, context)`` pairs; ``context`` records which subject or
    time step of the original tensor a slice came from.
    """
    mode = Mode.parse(mode)
    y = data.values
    if mode is Mode.MMTB:
        return [(data, {"mode": mode.value})]
    if mode is Mode.SMTC:
        return [(DataTensor(y[i:i + 1]), {"mode": mode.value, "subject": i})
                for i in range(data.n_subjects)]
    if mode is Mode.MMB:
        return [(DataTensor(y[:, :, t:t + 1]), {"mode": mode.value, "time": t})
                for t in range(data.n_timesteps)]
    collapse = np.mean if mode is Mode.MEAN_MMB else np.median
    return [(DataTensor(collapse(y, axis=2, keepdims=True)), {"mode": mode.value})]


# ---------------------------------------------------------------- samples

@dataclass
class ChainDiagnostics:
    log_posterior_trace: list[float] = field(default_factory=list)
    acceptance: dict[str, list[int]] = field(
        default_factory=lambda: {"zeta": [0, 0], "eta": [0, 0]})

    def acceptance_rate(self, name: str) -> float:
        acc, prop = self.acceptance[name]
        return acc / prop if prop else float("nan")


@dataclass
class SampleChain:
    draws: list[ModelState]
    iterations: list[int]
    diagnostics: ChainDiagnostics
    config: RunConfig | None = None
    context: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.draws)

    def stack(self, name: str) -> np.ndarray:
        """Stack one latent variable across draws, e.g. ``chain.stack("s")``."""
        if name in ("mu", "sigma_sq"):
            return np.stack([getattr(d.theta, name) for d in self.draws])
        return np.stack([getattr(d, name) for d in self.draws])


def _draw_record(it: int, st: ModelState, log_post: float) -> dict:
    rec = {
        "iteration": int(it),
        "s": (st.s + 1).tolist(),
        "c": (st.c + 1).tolist(),
        "gamma": st.gamma.astype(int).tolist(),
        "a": st.a.tolist(),
        "pi": st.pi.tolist(),
        "zeta": float(st.zeta),
        "omega0": st.omega0.tolist(),
        "eta": float(st.eta),
        "omega": st.omega.tolist(),
        "theta": {"mu": st.theta.mu.tolist(), "sigma_sq": st.theta.sigma_sq.tolist()},
        "log_posterior": float(log_post),
    }
    if st.v is not None:
        rec["v"] = st.v.tolist()
    return rec


def _record_state(rec: dict) -> ModelState:
    return ModelState(
        s=np.asarray(rec["s"], dtype=np.int64) - 1,
        pi=np.asarray(rec["pi"], dtype=float),
        zeta=float(rec["zeta"]),
        omega0=np.asarray(rec["omega0"], dtype=float),
        eta=float(rec["eta"]),
        omega=np.asarray(rec["omega"], dtype=float),
        c=np.asarray(rec["c"], dtype=np.int64) - 1,
        gamma=np.asarray(rec["gamma"], dtype=np.int8),
        a=np.asarray(rec["a"], dtype=float),
        theta=StateParameters(np.asarray(rec["theta"]["mu"], dtype=float),
                              np.asarray(rec["theta"]["sigma_sq"], dtype=float)),
        v=None if "v" not in rec else np.asarray(rec["v"], dtype=float),
    )


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_samples(chain: SampleChain, path) -> None:
    """Write one JSON record per retained draw, plus a ``.meta.json`` sidecar
    holding the config echo, slice context and diagnostics."""
    if not chain.draws:
        raise EmptyChain("cannot serialize a chain without draws")
    trace = chain.diagnostics.log_posterior_trace
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for it, st in zip(chain.iterations, chain.draws):
            fh.write(json.dumps(_draw_record(it, st, trace[it]), separators=(",", ":")))
            fh.write("\n")
    meta = {
        "config": None if chain.config is None else chain.config.to_dict(),
        "context": chain.context,
        "diagnostics": {
            "log_posterior_trace": list(map(float, trace)),
            "acceptance": chain.diagnostics.acceptance,
        },
    }
    meta_path(path).write_text(json.dumps(meta, separators=(",", ":")) + "\n", encoding="utf-8")


def read_samples(path) -> SampleChain:
    draws, iterations, log_posts = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            draws.append(_record_state(rec))
            iterations.append(int(rec["iteration"]))
            log_posts.append(float(rec["log_posterior"]))
    if not draws:
        raise EmptyChain(f"{path}: no draws")
    mp = meta_path(path)
    config, context = None, {}
    diagnostics = ChainDiagnostics()
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
        config = None if meta["config"] is None else RunConfig.from_dict(meta["config"])
        context = meta.get("context", {})
        diag = meta.get("diagnostics", {})
        diagnostics = ChainDiagnostics(
            list(map(float, diag.get("log_posterior_trace", []))),
            {k: list(v) for k, v in diag.get("acceptance", {}).items()},
        )
    if not diagnostics.log_posterior_trace:
        # No sidecar: rebuild a sparse trace from the per-draw values.
        trace = [float("nan")] * (max(iterations) + 1)
        for it, lp in zip(iterations, log_posts):
            trace[it] = lp
        diagnostics.log_posterior_trace = trace
    return SampleChain(draws, iterations, diagnostics, config, context)
