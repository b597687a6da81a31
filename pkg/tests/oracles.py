"""Brute-force reference computations used by the tests."""

import itertools
from collections import Counter

import numpy as np


def enumerate_sequences(L, w, a):
    """Exact posterior over (c, gamma) for one sequence.

    ``L`` is (T, K) log-likelihood, ``w`` the state probabilities and ``a``
    the persistence probabilities.  Returns ``({(c, g): prob}, log_evidence)``.
    """
    T, K = L.shape
    out = {}
    for c in itertools.product(range(K), repeat=T):
        for g in itertools.product((0, 1), repeat=T):
            if g[0]:
                continue
            p = w[c[0]]
            for t in range(1, T):
                if g[t]:
                    if c[t] != c[t - 1]:
                        p = 0.0
                        break
                    p *= a[t]
                else:
                    p *= (1 - a[t]) * w[c[t]]
            if p == 0.0:
                continue
            out[c, g] = p * np.exp(sum(L[t, c[t]] for t in range(T)))
    z = sum(out.values())
    return {k: v / z for k, v in out.items()}, float(np.log(z))


def empirical(c, g):
    """Relative frequencies of (c, gamma) rows."""
    cnt = Counter(zip(map(tuple, np.asarray(c).tolist()), map(tuple, np.asarray(g).tolist())))
    n = sum(cnt.values())
    return {k: v / n for k, v in cnt.items()}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def brute_binder(draws, a=1.0, b=1.0):
    """Expected Binder loss of every partition of the items, by enumeration."""
    from mmtb.summaries import binder_loss, enumerate_partitions

    n = len(draws[0])
    best = None
    for part in enumerate_partitions(n):
        loss = np.mean([binder_loss(d, part, a, b) for d in draws])
        if best is None or loss < best[1] - 1e-12:
            best = (np.asarray(part), loss)
    return best
