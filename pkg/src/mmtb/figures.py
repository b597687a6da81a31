"""Static SVG figures.

Output is byte-reproducible: the SVG id salt is fixed and no creation date is
written.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .summaries import canonical_labels  # noqa: E402

_RC = {"svg.hashsalt": "mmtb", "svg.fonttype": "path", "font.size": 8}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def coclustering_heatmap(P: np.ndarray, partition, path) -> None:
    """Co-clustering matrix with rows and columns grouped by estimated profile."""
    labels = canonical_labels(partition)
    order = np.argsort(labels, kind="stable")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        im = ax.imshow(P[np.ix_(order, order)], vmin=0, vmax=1, cmap="Greys",
                       interpolation="nearest")
        ticks = np.arange(len(order))
        ax.set_xticks(ticks, [str(i + 1) for i in order])
        ax.set_yticks(ticks, [str(i + 1) for i in order])
        # profile block boundaries
        edges = np.flatnonzero(np.diff(labels[order])) + 0.5
        for e in edges:
            ax.axhline(e, color="tab:red", lw=0.8)
            ax.axvline(e, color="tab:red", lw=0.8)
        ax.set_xlabel("subject")
        ax.set_ylabel("subject")
        fig.colorbar(im, ax=ax, label="P(same profile)")
        fig.tight_layout()
        _save(fig, path)


def location_sequences(locations: dict, changepoints: dict, path) -> None:
    """One panel per estimated profile: location sequence of every measurement,
    with shading proportional to the changepoint probability (t >= 2)."""
    profiles = sorted(locations)
    R, T = locations[profiles[0]].shape
    t = np.arange(1, T + 1)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(profiles), 1, figsize=(6, 1.9 * len(profiles)),
                                 sharex=True, squeeze=False)
        for ax, p in zip(axes[:, 0], profiles):
            cp = changepoints[p][:, 1:].mean(axis=0)
            for tt, prob in zip(t[1:], cp):
                if prob > 0.05:
                    ax.axvspan(tt - 0.5, tt + 0.5, color="tab:orange", alpha=0.6 * prob, lw=0)
            for r in range(R):
                ax.plot(t, locations[p][r], lw=0.9, label=f"m{r + 1}")
            ax.set_ylabel(f"profile {p + 1}")
        axes[-1, 0].set_xlabel("time")
        if R <= 12:
            axes[0, 0].legend(ncol=min(R, 6), fontsize=6, frameon=False, loc="upper right")
        fig.tight_layout()
        _save(fig, path)


def traceplot(traces: list, path, label: str = "joint log-posterior") -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 2.6))
        for j, tr in enumerate(traces):
            tr = np.asarray(tr, dtype=float)
            ax.plot(np.arange(1, len(tr) + 1), tr, lw=0.6, label=f"chain {j + 1}")
        ax.set_xlabel("iteration")
        ax.set_ylabel(label)
        if len(traces) > 1:
            ax.legend(frameon=False, fontsize=6)
        fig.tight_layout()
        _save(fig, path)


def comparison_bands(bands: dict, path) -> None:
    """Mean curve and 90% band per sampler for each comparison metric."""
    metrics = list(dict.fromkeys(m for _, m in bands))
    samplers = list(dict.fromkeys(s for s, _ in bands))
    titles = {"bl": "BL", "mae": "MAE", "f_measure": "f-measure", "loglik": "log-likelihood"}
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(metrics), figsize=(2.6 * len(metrics), 2.4))
        for ax, m in zip(np.atleast_1d(axes), metrics):
            for s in samplers:
                mean, lo, hi = bands[s, m]
                x = np.arange(1, len(mean) + 1)
                ax.plot(x, mean, lw=0.9, label=s)
                ax.fill_between(x, lo, hi, alpha=0.25, lw=0)
            ax.set_title(titles.get(m, m))
            ax.set_xlabel("iteration")
        np.atleast_1d(axes)[0].legend(frameon=False, fontsize=6)
        fig.tight_layout()
        _save(fig, path)
