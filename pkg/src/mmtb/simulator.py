"""Synthetic benchmark scenarios with known ground truth.

Three scenarios on N=6 subjects, R=5 measurements, T=30 time steps and ten
Normal states with means on an even grid over [-9, 9]:

* ``time_dep``: states are redrawn every 5 steps, the measurement partition
  changes once, and every subject follows its own sequence.
* ``subject_dep``: states are redrawn at every step. Subjects 1-4 share one
  sequence and subjects 5-6 another.
* ``both``: states are redrawn every 3 steps, the partition changes twice,
  and profiles are as in ``subject_dep``.

At a redraw epoch that is not a partition change, each block of the current
measurement partition gets a fresh state, with distinct blocks getting
distinct states, so the partition itself is preserved. At a change epoch the
measurements redraw independently until the induced partition differs.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_io import DataTensor

N_SUBJECTS, N_MEASUREMENTS, N_TIMESTEPS = 6, 5, 30
STATE_MEANS = np.linspace(-9.0, 9.0, 10)
# even state index -> 1.5, odd -> 1.25
STATE_SDS = np.where(np.arange(10) % 2 == 0, 1.5, 1.25)


class Scenario(str, enum.Enum):
    TIME_DEP = "time_dep"
    SUBJECT_DEP = "subject_dep"
    BOTH = "both"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"1": "time_dep", "2": "subject_dep", "3": "both",
                   "time": "time_dep", "subject": "subject_dep"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scenario {value!r}") from None


@dataclass
class GroundTruth:
    subject_partition: np.ndarray   # (N,) labels, 0-based
    true_c: np.ndarray              # (N, R, T) state labels, 0-based
    true_gamma: np.ndarray          # (N, R, T) 1 = state copied from t-1
    true_means: np.ndarray          # (N, R, T)
    state_means: np.ndarray
    state_sds: np.ndarray
    scenario: str = ""

    def true_changepoints(self) -> np.ndarray:
        """Binary (N, R, T) indicator of fresh draws at t >= 2."""
        cp = 1 - self.true_gamma
        cp[:, :, 0] = 0
        return cp

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "subject_partition": (self.subject_partition + 1).tolist(),
            "true_c": (self.true_c + 1).tolist(),
            "true_gamma": self.true_gamma.tolist(),
            "true_means": self.true_means.tolist(),
            "state_means": self.state_means.tolist(),
            "state_sds": self.state_sds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            subject_partition=np.asarray(d["subject_partition"], dtype=np.int64) - 1,
            true_c=np.asarray(d["true_c"], dtype=np.int64) - 1,
            true_gamma=np.asarray(d["true_gamma"], dtype=np.int8),
            true_means=np.asarray(d["true_means"], dtype=float),
            state_means=np.asarray(d["state_means"], dtype=float),
            state_sds=np.asarray(d["state_sds"], dtype=float),
            scenario=d.get("scenario", ""),
        )


def write_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(truth.to_dict(), fh, separators=(",", ":"))
        fh.write("\n")


def read_truth(path) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        return GroundTruth.from_dict(json.load(fh))


def _canonical(labels: np.ndarray) -> tuple:
    # relabel by order of first appearance
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(int(x), len(seen)) for x in labels)


def _epoch_plan(scenario: Scenario, T: int):
    """Redraw epochs and the subset that must change the partition (0-based)."""
    if scenario is Scenario.SUBJECT_DEP:
        return list(range(1, T)), []
    period, n_changes = (5, 1) if scenario is Scenario.TIME_DEP else (3, 2)
    epochs = list(range(period, T, period))
    changes = []
    for j in range(1, n_changes + 1):
        target = j * T / (n_changes + 1)
        changes.append(min(epochs, key=lambda e: (abs(e - target), e)))
    return epochs, changes


def simulate_sequence(rng: np.random.Generator, R: int, T: int, n_states: int,
                      epochs, changes, preserve: bool = True):
    """State labels (R, T) and persistence indicators for one profile.

    With ``preserve`` false every epoch is a free independent redraw.
    """
    c = np.empty((R, T), dtype=np.int64)
    g = np.ones((R, T), dtype=np.int8)
    c[:, 0] = rng.integers(0, n_states, size=R)
    g[:, 0] = 0
    epochs, changes = set(epochs), set(changes)
    for t in range(1, T):
        if t not in epochs:
            c[:, t] = c[:, t - 1]
            continue
        g[:, t] = 0
        prev = c[:, t - 1]
        if t in changes:
            old = _canonical(prev)
            while True:
                new = rng.integers(0, n_states, size=R)
                if _canonical(new) != old:
                    break
            c[:, t] = new
        elif preserve:
            # partition-preserving redraw: one distinct fresh state per block
            blocks, inv = np.unique(prev, return_inverse=True)
            fresh = rng.choice(n_states, size=len(blocks), replace=False)
            c[:, t] = fresh[inv]
        else:
            c[:, t] = rng.integers(0, n_states, size=R)
    return c, g


def simulate_scenario(scenario, seed: int, n_subjects: int = N_SUBJECTS,
                      n_measurements: int = N_MEASUREMENTS,
                      n_timesteps: int = N_TIMESTEPS) -> tuple[DataTensor, GroundTruth]:
    scenario = Scenario.parse(scenario)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    N, R, T = n_subjects, n_measurements, n_timesteps
    if scenario is Scenario.TIME_DEP:
        profiles = np.arange(N)
    else:
        profiles = np.where(np.arange(N) < min(4, N), 0, 1)
    epochs, changes = _epoch_plan(scenario, T)
    n_profiles = int(profiles.max()) + 1
    preserve = scenario is not Scenario.SUBJECT_DEP
    seqs = [simulate_sequence(rng, R, T, len(STATE_MEANS), epochs, changes, preserve)
            for _ in range(n_profiles)]
    true_c = np.stack([seqs[p][0] for p in profiles])
    true_gamma = np.stack([seqs[p][1] for p in profiles])
    if scenario is Scenario.SUBJECT_DEP:
        true_gamma[:] = 0
    means = STATE_MEANS[true_c]
    y = means + STATE_SDS[true_c] * rng.standard_normal(means.shape)
    truth = GroundTruth(profiles.astype(np.int64), true_c, true_gamma, means,
                        STATE_MEANS.copy(), STATE_SDS.copy(), scenario.value)
    return DataTensor(y), truth


def simulate_to_dir(scenario, seed: int, replicates: int, out_dir) -> list[Path]:
    """Write ``<scenario>_<rep>.csv`` and ``.truth`` files; returns CSV paths."""
    from .tensor_io import write_long_csv

    scenario = Scenario.parse(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for rep in range(1, replicates + 1):
        data, truth = simulate_scenario(scenario, replicate_seed(seed, rep))
        csv = out / f"{scenario.value}_{rep}.csv"
        write_long_csv(data, csv)
        write_truth(truth, out / f"{scenario.value}_{rep}.truth")
        paths.append(csv)
    return paths


def replicate_seed(seed: int, rep: int) -> int:
    return int(seed) * 1000 + int(rep)
