"""Posterior summaries and evaluation metrics.

Partitions are plain integer label arrays; every comparison below depends
only on the induced equivalence relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDraws, EmptyProfile, LengthMismatch, ShapeMismatch


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64).ravel()
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return len(self.labels)

    def canonical(self) -> np.ndarray:
        """Labels renumbered 0, 1, ... by order of first appearance."""
        return canonical_labels(self.labels)

    @property
    def n_clusters(self) -> int:
        return len(np.unique(self.labels))

    def same_as(self, other: "Partition") -> bool:
        return len(self) == len(other) and np.array_equal(self.canonical(), other.canonical())


def canonical_labels(labels) -> np.ndarray:
    labels = np.asarray(labels).ravel()
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inv]


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else np.asarray(p).ravel()


def _same(labels: np.ndarray) -> np.ndarray:
    return labels[:, None] == labels[None, :]


def binder_loss(s_star, s, a: float = 1.0, b: float = 1.0, normalize: bool = False) -> float:
    """Weighted count of pairs split by ``s`` but joined in ``s_star`` (cost a)
    or joined by ``s`` but split in ``s_star`` (cost b)."""
    x, y = _labels(s_star), _labels(s)
    if len(x) != len(y):
        raise LengthMismatch(f"partitions of length {len(x)} and {len(y)}")
    n = len(x)
    iu = np.triu_indices(n, 1)
    sx, sy = _same(x)[iu], _same(y)[iu]
    loss = a * np.sum(sx & ~sy) + b * np.sum(~sx & sy)
    if normalize:
        pairs = n * (n - 1) / 2
        return float(loss / pairs) if pairs else 0.0
    return float(loss)


def _stack_draws(draws) -> np.ndarray:
    rows = [_labels(d) for d in draws]
    if not rows:
        raise EmptyDraws("no draws supplied")
    n = {len(r) for r in rows}
    if len(n) != 1:
        raise LengthMismatch(f"draws have differing lengths {sorted(n)}")
    return np.vstack(rows)


def coclustering_matrix(draws) -> np.ndarray:
    S = _stack_draws(draws)
    M, n = S.shape
    P = np.zeros((n, n))
    for row in S:
        P += _same(row)
    return P / M


def expected_binder(P: np.ndarray, labels, a: float = 1.0, b: float = 1.0) -> float:
    """Expected Binder loss of ``labels`` under the empirical draw distribution
    summarized by its co-clustering matrix P."""
    same = _same(np.asarray(labels))
    iu = np.triu_indices(P.shape[0], 1)
    p, sm = P[iu], same[iu]
    return float(np.sum(np.where(sm, b * (1 - p), a * p)))


def _greedy(P, a, b, order, init=None, max_labels=None, max_sweeps=100):
    """Sequential allocation then full reassignment sweeps to a fixed point.

    Moving item i into cluster C costs sum_{j in C} b(1 - p_ij) and saves
    a p_ij for each j in C, so the marginal score is sum_j (b - (a + b) p_ij);
    a new cluster scores 0.
    """
    n = P.shape[0]
    W = b - (a + b) * P
    labels = np.full(n, -1, dtype=np.int64)
    if init is None:
        for i in order:
            labels[i] = _best_label(W, labels, i, max_labels)
    else:
        labels[:] = canonical_labels(init)
    for _ in range(max_sweeps):
        changed = False
        for i in order:
            old = labels[i]
            labels[i] = -1
            new = _best_label(W, labels, i, max_labels, prefer=old)
            labels[i] = new
            changed |= new != old
        if not changed:
            break
    return canonical_labels(labels)


def _best_label(W, labels, i, max_labels, prefer=-1):
    """Label with the lowest marginal score for item i; ties keep ``prefer``."""
    used = np.unique(labels[labels >= 0])
    cands = [(round(float(W[i, labels == lab].sum()), 10), lab != prefer, lab) for lab in used]
    if max_labels is None or len(used) < max_labels:
        if prefer >= 0 and prefer not in used:
            fresh = prefer
        else:
            fresh = int(labels.max()) + 1 if len(used) else 0
        cands.append((0.0, fresh != prefer, fresh))
    return min(cands)[2]


def minimize_expected_binder(draws, a: float = 1.0, b: float = 1.0, n_restarts: int = 16,
                             max_labels: int | None = None, seed: int = 0) -> Partition:
    """Approximate minimizer of the posterior expected Binder loss.

    The candidate set always contains every sampled partition, so the result
    is never worse than the best draw.
    """
    S = _stack_draws(draws)
    P = coclustering_matrix(S)
    n = P.shape[0]
    rng = np.random.default_rng(seed)
    best, best_loss = None, np.inf

    def consider(lab):
        nonlocal best, best_loss
        if max_labels is not None and len(np.unique(lab)) > max_labels:
            return
        loss = expected_binder(P, lab, a, b)
        if loss < best_loss - 1e-12:
            best, best_loss = canonical_labels(lab), loss

    uniq = np.unique(np.vstack([canonical_labels(r) for r in S]), axis=0)
    for row in uniq:
        consider(row)
    for r in range(n_restarts):
        order = np.arange(n) if r == 0 else rng.permutation(n)
        consider(_greedy(P, a, b, order, max_labels=max_labels))
    if best is not None:
        # polish the incumbent with reassignment sweeps
        consider(_greedy(P, a, b, np.arange(n), init=best, max_labels=max_labels))
    return Partition(best)


def enumerate_partitions(n: int):
    """All set partitions of n items as canonical label tuples (Bell(n) many)."""
    if n == 0:
        yield ()
        return

    def rec(prefix, k):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for lab in range(k + 1):
            yield from rec(prefix + [lab], max(k, lab + 1))

    yield from rec([0], 1)


def brute_force_binder(draws, a: float = 1.0, b: float = 1.0) -> tuple[np.ndarray, float]:
    """Exhaustive minimizer; only sensible for a handful of items."""
    P = coclustering_matrix(draws)
    best, best_loss = None, np.inf
    for lab in enumerate_partitions(P.shape[0]):
        loss = expected_binder(P, lab, a, b)
        if loss < best_loss - 1e-12:
            best, best_loss = np.array(lab), loss
    return best, best_loss


# ------------------------------------------------------------ draw summaries

def _draw_fields(draws):
    if len(draws) == 0:
        raise EmptyDraws("no draws supplied")
    s = np.stack([d.s for d in draws])            # (M, N)
    c = np.stack([d.c for d in draws])            # (M, Z, R, T)
    g = np.stack([d.gamma for d in draws])
    mu = np.stack([d.theta.mu for d in draws])    # (M, K)
    return s, c, g, mu


def subject_cells(draws, field: str = "c") -> np.ndarray:
    """Per-draw, per-subject (R, T) arrays of ``c`` or ``gamma``: (M, N, R, T)."""
    s, c, g, _ = _draw_fields(draws)
    x = c if field == "c" else g
    m = np.arange(len(draws))[:, None]
    return x[m, s]


def subject_location(draws) -> np.ndarray:
    """mu of each subject's assigned state per draw: (M, N, R, T)."""
    s, c, _, mu = _draw_fields(draws)
    m = np.arange(len(draws))[:, None]
    cells = c[m, s]
    return np.take_along_axis(mu[:, None, None, :], cells.reshape(len(draws), 1, 1, -1),
                              axis=-1).reshape(cells.shape)


def _per_profile(values: np.ndarray, partition) -> dict[int, np.ndarray]:
    # labels are taken as 0-based profile ids, so a gap is an empty profile
    labels = _labels(partition).astype(np.int64)
    if values.shape[1] != len(labels):
        raise ShapeMismatch(f"partition has {len(labels)} items, draws {values.shape[1]}")
    out = {}
    for p in range(labels.max() + 1):
        members = labels == p
        if not members.any():
            raise EmptyProfile(f"profile {p + 1} has no subjects")
        out[p] = values[:, members].mean(axis=(0, 1))
    return out


def profile_location_sequences(draws, estimated_partition) -> dict[int, np.ndarray]:
    return _per_profile(subject_location(draws), estimated_partition)


def changepoint_probabilities(draws, estimated_partition) -> dict[int, np.ndarray]:
    fresh = 1.0 - subject_cells(draws, "gamma")
    return _per_profile(fresh, estimated_partition)


def f_measure_changepoints(estimated_probs, true_changepoints, threshold: float = 0.5) -> float:
    p = np.asarray(estimated_probs, dtype=float)
    truth = np.asarray(true_changepoints)
    if p.shape != truth.shape:
        raise ShapeMismatch(f"probabilities {p.shape} vs truth {truth.shape}")
    pred = p[..., 1:] > threshold
    true = truth[..., 1:].astype(bool)
    tp = np.sum(pred & true)
    fp = np.sum(pred & ~true)
    fn = np.sum(~pred & true)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    if prec + rec == 0:
        return 0.0
    return float(2 * prec * rec / (prec + rec))


def mae_locations(draws, true_means) -> float:
    est = subject_location(draws)
    truth = np.asarray(true_means, dtype=float)
    if est.shape[1:] != truth.shape:
        raise ShapeMismatch(f"draws imply {est.shape[1:]}, truth is {truth.shape}")
    return float(np.mean(np.abs(est - truth[None])))


def _pair_disagreement(labels: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Normalized Binder loss (a=b=1) over the R axis (second to last)."""
    R = labels.shape[-2]
    if R < 2:
        return np.zeros(labels.shape[:-2] + labels.shape[-1:])
    i, j = np.triu_indices(R, 1)
    est = labels[..., i, :] == labels[..., j, :]
    tru = truth[..., i, :] == truth[..., j, :]
    return np.mean(est != tru, axis=-2)


def measurement_partition_bl(draws, true_c) -> float:
    cells = subject_cells(draws, "c")          # (M, N, R, T)
    truth = np.asarray(true_c)
    if cells.shape[1:] != truth.shape:
        raise ShapeMismatch(f"draws imply {cells.shape[1:]}, truth is {truth.shape}")
    return float(np.mean(_pair_disagreement(cells, truth[None])))


def subject_changepoint_f(draws, true_changepoints, threshold: float = 0.5) -> float:
    """f-measure computed per subject from that subject's changepoint
    probabilities, averaged over subjects."""
    probs = (1.0 - subject_cells(draws, "gamma")).mean(axis=0)   # (N, R, T)
    truth = np.asarray(true_changepoints)
    if probs.shape != truth.shape:
        raise ShapeMismatch(f"draws imply {probs.shape}, truth is {truth.shape}")
    return float(np.mean([f_measure_changepoints(probs[i], truth[i], threshold)
                          for i in range(len(probs))]))


@dataclass
class SummaryReport:
    subject_partition: Partition
    coclustering: np.ndarray
    profile_location_sequences: dict
    changepoint_probabilities: dict
    metrics: dict | None = None
    binder_a: float = 1.0
    binder_b: float = 1.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "subject_partition": (self.subject_partition.canonical() + 1).tolist(),
            "n_profiles": self.subject_partition.n_clusters,
            "binder_a": self.binder_a,
            "binder_b": self.binder_b,
            "coclustering": self.coclustering.tolist(),
            "profile_location_sequences": {str(k + 1): v.tolist()
                                           for k, v in self.profile_location_sequences.items()},
            "changepoint_probabilities": {str(k + 1): v.tolist()
                                          for k, v in self.changepoint_probabilities.items()},
        }
        if self.metrics is not None:
            d["metrics"] = self.metrics
        d.update(self.extra)
        return d


def summarize(draws, a: float = 1.0, b: float = 1.0, n_restarts: int = 16) -> SummaryReport:
    s = [d.s for d in draws]
    est = minimize_expected_binder(s, a, b, n_restarts=n_restarts)
    return SummaryReport(
        subject_partition=est,
        coclustering=coclustering_matrix(s),
        profile_location_sequences=profile_location_sequences(draws, est),
        changepoint_probabilities=changepoint_probabilities(draws, est),
        binder_a=a, binder_b=b,
    )


def evaluate_draws(draws, truth, a: float = 1.0, b: float = 1.0) -> dict:
    """Metric suite against simulation ground truth.

    Subject-partition BL uses the point estimate; the others average over
    draws (and subjects and time steps).
    """
    est = minimize_expected_binder([d.s for d in draws], a, b)
    return {
        "subject_bl": binder_loss(truth.subject_partition, est, a, b, normalize=True),
        "measurement_bl": measurement_partition_bl(draws, truth.true_c),
        "mae": mae_locations(draws, truth.true_means),
        "f_measure": subject_changepoint_f(draws, truth.true_changepoints()),
    }


__all__ = [
    "Partition", "binder_loss", "coclustering_matrix", "minimize_expected_binder",
    "profile_location_sequences", "changepoint_probabilities", "f_measure_changepoints",
    "mae_locations", "measurement_partition_bl", "SummaryReport", "summarize",
    "evaluate_draws", "brute_force_binder", "enumerate_partitions",
]
