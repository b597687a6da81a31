"""Compiled inner loops for the state-sequence and profile updates.

Batch kernels work on a flat batch of sequences: ``L`` is (B, T, K) log
likelihood, ``w`` (B, K) state probabilities, ``a`` (B, T) persistence
probabilities and ``u`` (B, T) uniforms in (0, 1].  They return the number
of degenerate categorical draws, which were resolved with prior weights.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _draw(weights, n, u):
    total = 0.0
    for j in range(n):
        total += weights[j]
    x = u * total
    acc = 0.0
    for j in range(n):
        acc += weights[j]
        if acc >= x and weights[j] > 0.0:
            return j
    for j in range(n - 1, -1, -1):
        if weights[j] > 0.0:
            return j
    return n - 1


@njit(cache=True)
def _valid(weights, n):
    total = 0.0
    for j in range(n):
        total += weights[j]
    return total > 0.0 and math.isfinite(total)


# Inside a sum or a categorical draw, a term more than exp(CLAMP) below the
# largest one is beneath double resolution and is skipped.  Besides saving
# transcendental calls this keeps every product in the normal floating-point
# range (subnormal arithmetic is very slow).
CLAMP = -45.0
# Propagated filter values are clamped much deeper, and state probabilities
# below FLUSH are treated as zero in the evidence recursion, so that every
# product stays in the normal range.
DEEP = -690.0
FLUSH = 1e-290


@njit(cache=True)
def _exp(x):
    return math.exp(x) if x > CLAMP else 0.0


@njit(cache=True)
def _log(x):
    return math.log(x) if x > 0.0 else -np.inf


@njit(cache=True)
def _lae(x, y):
    """log(exp(x) + exp(y))."""
    if x < y:
        x, y = y, x
    if x == -np.inf:
        return -np.inf
    d = y - x
    if d < CLAMP:
        return x
    return x + math.log(1.0 + math.exp(d))


@njit(cache=True)
def _logs(w, out):
    for k in range(w.shape[0]):
        out[k] = _log(w[k])


@njit(cache=True)
def _backward_row(L, lw, a, msg, e):
    T, K = L.shape
    for k in range(K):
        msg[T - 1, k] = 0.0
    for t in range(T - 2, -1, -1):
        mw = -np.inf
        for k in range(K):
            v = L[t + 1, k] + msg[t + 1, k]
            e[k] = v
            if v + lw[k] > mw:
                mw = v + lw[k]
        # log sum_h w_h exp(v_h)
        mix = 0.0
        for k in range(K):
            mix += _exp(e[k] + lw[k] - mw)
        lmix = mw + math.log(mix)
        at = a[t + 1]
        la = _log(at)
        x2 = _log(1.0 - at) + lmix
        best = -np.inf
        for k in range(K):
            lm = _lae(la + e[k], x2)
            msg[t, k] = lm
            if lm > best:
                best = lm
        for k in range(K):
            msg[t, k] -= best


@njit(cache=True)
def _forward_row(L, msg, w, lw, a, u, c, g, e, weights):
    T, K = L.shape
    bad = 0
    mx = -np.inf
    for k in range(K):
        v = lw[k] + L[0, k] + msg[0, k]
        e[k] = v
        if v > mx:
            mx = v
    for k in range(K):
        weights[k] = _exp(e[k] - mx)
    if not _valid(weights, K):
        bad += 1
        for k in range(K):
            weights[k] = w[k]
    c[0] = _draw(weights, K, u[0])
    g[0] = 0
    for t in range(1, T):
        at = a[t]
        la, lb = _log(at), _log(1.0 - at)
        prev = c[t - 1]
        mx = la + L[t, prev] + msg[t, prev]
        e[0] = mx
        for k in range(K):
            v = lb + lw[k] + L[t, k] + msg[t, k]
            weights[k + 1] = v
            if v > mx:
                mx = v
        weights[0] = _exp(e[0] - mx)
        for k in range(K):
            weights[k + 1] = _exp(weights[k + 1] - mx)
        if not _valid(weights, K + 1):
            bad += 1
            weights[0] = at
            for k in range(K):
                weights[k + 1] = (1.0 - at) * w[k]
        j = _draw(weights, K + 1, u[t])
        if j == 0:
            g[t] = 1
            c[t] = prev
        else:
            g[t] = 0
            c[t] = j - 1
    return bad


@njit(cache=True)
def _prior_row(w, a, u, c, g):
    """Draw one (c, gamma) sequence from the temporal partition prior."""
    T = a.shape[0]
    K = w.shape[0]
    c[0] = _draw(w, K, u[0])
    g[0] = 0
    for t in range(1, T):
        # stay with probability a_t, else resample from w
        x = u[t]
        if x <= a[t]:
            g[t] = 1
            c[t] = c[t - 1]
        else:
            g[t] = 0
            c[t] = _draw(w, K, (x - a[t]) / (1.0 - a[t]))
    return 0


@njit(cache=True)
def _filter_row(L, w, lw, a, P):
    """Scaled forward filter of one sequence.

    Row t of P receives P(c_t = k | y_1..y_t), normalized to sum 1; returns
    the log evidence (-inf if every path has zero weight).
    """
    T, K = L.shape
    logz = 0.0
    for t in range(T):
        p = P[t]
        if t == 0:
            for k in range(K):
                p[k] = lw[k] + L[0, k]
        else:
            q = P[t - 1]
            at = a[t]
            for k in range(K):
                wk = w[k] if w[k] > FLUSH else 0.0
                p[k] = L[t, k] + _log(at * q[k] + (1.0 - at) * wk)
        mx = -np.inf
        for k in range(K):
            if p[k] > mx:
                mx = p[k]
        if mx == -np.inf or not math.isfinite(mx):
            return -np.inf
        tot = 0.0
        for k in range(K):
            x = p[k] - mx
            p[k] = math.exp(x) if x > DEEP else 0.0
            tot += p[k]
        logz += mx + math.log(tot)
        for k in range(K):
            p[k] /= tot
    return logz


@njit(cache=True)
def _sample_row(P, w, a, u, c, g):
    """Backward sampling of (c, gamma) from a filter computed by _filter_row."""
    T, K = P.shape
    c[T - 1] = _draw(P[T - 1], K, u[0])
    for t in range(T - 1, 0, -1):
        j = c[t]
        at = a[t]
        stay = at * P[t - 1, j]
        fresh = (1.0 - at) * (w[j] if w[j] > FLUSH else 0.0)
        ps = stay / (stay + fresh)
        x = u[t]
        if x <= ps:
            g[t] = 1
            c[t - 1] = j
        else:
            g[t] = 0
            c[t - 1] = _draw(P[t - 1], K, (x - ps) / (1.0 - ps))
    g[0] = 0


@njit(cache=True)
def backward(L, w, a, msg):
    B, T, K = L.shape
    e = np.empty(K)
    lw = np.empty(K)
    for b in range(B):
        _logs(w[b], lw)
        _backward_row(L[b], lw, a[b], msg[b], e)


@njit(cache=True)
def forward(L, msg, w, a, u, c, g):
    B, T, K = L.shape
    e = np.empty(K)
    weights = np.empty(K + 1)
    lw = np.empty(K)
    bad = 0
    for b in range(B):
        _logs(w[b], lw)
        bad += _forward_row(L[b], msg[b], w[b], lw, a[b], u[b], c[b], g[b], e, weights)
    return bad


@njit(cache=True)
def blocked(L, w, a, u, c, g, active):
    """Backward messages then forward draw per row; inactive rows (no data)
    are drawn from the prior directly."""
    B, T, K = L.shape
    e = np.empty(K)
    weights = np.empty(K + 1)
    lw = np.empty(K)
    msg = np.empty((T, K))
    bad = 0
    for b in range(B):
        if not active[b]:
            _prior_row(w[b], a[b], u[b], c[b], g[b])
            continue
        _logs(w[b], lw)
        _backward_row(L[b], lw, a[b], msg, e)
        bad += _forward_row(L[b], msg, w[b], lw, a[b], u[b], c[b], g[b], e, weights)
    return bad


@njit(cache=True)
def filtered(L, w, a, u, c, g):
    """Forward filter then backward sampling; same target as ``blocked``."""
    B, T, K = L.shape
    lw = np.empty(K)
    P = np.empty((T, K))
    bad = 0
    for b in range(B):
        _logs(w[b], lw)
        if _filter_row(L[b], w[b], lw, a[b], P) > -np.inf:
            _sample_row(P, w[b], a[b], u[b], c[b], g[b])
        else:
            bad += 1
            _prior_row(w[b], a[b], u[b], c[b], g[b])
    return bad


@njit(cache=True)
def log_evidence(L, w, a):
    """Per batch row, log of the sum over all (c, gamma) sequences of the
    prior probability times the likelihood."""
    B, T, K = L.shape
    out = np.empty(B)
    P = np.empty((T, K))
    lw = np.empty(K)
    for b in range(B):
        _logs(w[b], lw)
        out[b] = _filter_row(L[b], w[b], lw, a[b], P)
    return out


@njit(cache=True)
def collapsed_profiles(logf, s, c, g, log_pi, w, a, u_s, u_seq):
    """Sequential profile assignment with empty-profile sequences summed out.

    logf (N, R, T, K); s (N,); c, g (Z, R, T) updated in place; log_pi (Z,);
    w (Z, K); a (Z, T); u_s (N,); u_seq (N, Z, R, T).
    """
    N, R, T, K = logf.shape
    Z = c.shape[0]
    counts = np.zeros(Z, dtype=np.int64)
    for i in range(N):
        counts[s[i]] += 1
    logw = np.empty(Z)
    pw = np.empty(Z)
    lw = np.empty(K)
    filt = np.empty((Z, R, T, K))
    bad = 0
    for i in range(N):
        counts[s[i]] -= 1
        for z in range(Z):
            ll = 0.0
            if counts[z] > 0:
                for r in range(R):
                    for t in range(T):
                        ll += logf[i, r, t, c[z, r, t]]
            else:
                _logs(w[z], lw)
                for r in range(R):
                    ll += _filter_row(logf[i, r], w[z], lw, a[z], filt[z, r])
            logw[z] = log_pi[z] + ll
        mx = -np.inf
        for z in range(Z):
            if logw[z] > mx:
                mx = logw[z]
        for z in range(Z):
            pw[z] = _exp(logw[z] - mx) if mx > -np.inf else 0.0
        if not _valid(pw, Z):
            bad += 1
            for z in range(Z):
                pw[z] = math.exp(log_pi[z])
        znew = _draw(pw, Z, u_s[i])
        for z in range(Z):
            if counts[z] > 0:
                continue
            for r in range(R):
                if z == znew and logw[z] > -np.inf:
                    _sample_row(filt[z, r], w[z], a[z], u_seq[i, z, r], c[z, r], g[z, r])
                else:
                    _prior_row(w[z], a[z], u_seq[i, z, r], c[z, r], g[z, r])
        s[i] = znew
        counts[znew] += 1
    return bad


@njit(cache=True)
def marginal_site(L, w, a, u, c, g, b, t):
    """Single-site draw of (c[b, t], g[b, t]) given its neighbours."""
    B, T, K = L.shape
    weights = np.empty(K + 1)
    locked = t + 1 < T and g[b, t + 1] == 1
    nxt = c[b, t + 1] if t + 1 < T else -1
    at = a[b, t] if t > 0 else 0.0
    lb = _log(1.0 - at)
    mx = -np.inf
    for k in range(K):
        x = lb + _log(w[b, k]) + L[b, t, k]
        if locked and k != nxt:
            x = -np.inf
        weights[k + 1] = x
        if x > mx:
            mx = x
    weights[0] = -np.inf
    if t > 0:
        prev = c[b, t - 1]
        if not (locked and prev != nxt):
            weights[0] = _log(at) + L[b, t, prev]
            if weights[0] > mx:
                mx = weights[0]
    if mx == -np.inf:
        # Only reachable through underflow: the current value always has
        # positive weight under exact arithmetic.
        return 1
    for j in range(K + 1):
        weights[j] = _exp(weights[j] - mx)
    j = _draw(weights, K + 1, u)
    if j == 0:
        g[b, t] = 1
        c[b, t] = c[b, t - 1]
    else:
        g[b, t] = 0
        c[b, t] = j - 1
    return 0


@njit(cache=True)
def marginal_sweep(L, w, a, u, c, g):
    B, T, K = L.shape
    bad = 0
    for b in range(B):
        for t in range(T):
            bad += marginal_site(L, w, a, u[b, t], c, g, b, t)
    return bad
