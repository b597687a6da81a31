"""Gibbs sampler for the temporal biclustering model.

One sweep updates, in order: the profile block (zeta, pi, s), the state
block (CRF table counts, eta, omega0, omega, the (c, gamma) sequences, a) and
the likelihood block (theta, plus the auxiliary variances under the t
likelihood).

Randomness: every iteration draws from its own Philox generator keyed by
``(seed, iteration)``.  The state-sequence update consumes one fixed-layout
block of uniforms indexed by (z, r, t), so each (z, r) sequence owns a
deterministic slice of the stream regardless of how the work is scheduled.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .errors import DegenerateWeights, MMTBError
from .model import (PROB_FLOOR, Hyperparameters, ModelState, NormalInvGamma, StateParameters,
                    StudentT, joint_log_posterior, likelihood_matrix, log_density_table,
                    profile_loglik)
from .tensor_io import ChainDiagnostics, DataTensor, RunConfig, SampleChain

log = logging.getLogger(__name__)

MAX_PROPOSALS = 100


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    """Counter-style generator for one iteration of one chain.

    ``iteration == -1`` is reserved for initialization.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), iteration + 1])))


def _uniform(rng, shape) -> np.ndarray:
    # (0, 1]: a zero would select a zero-weight leading category
    return 1.0 - rng.random(shape)


# ------------------------------------------------------------ categorical

def sample_categorical(weights: np.ndarray, u: np.ndarray, strict: bool = True,
                       fallback: np.ndarray | None = None) -> np.ndarray:
    """Inverse-CDF draw over the last axis of non-negative ``weights``.

    Rows whose weights are all zero (or not finite) raise
    :class:`DegenerateWeights` when ``strict``; otherwise they are redrawn
    from ``fallback`` (uniform if omitted) and a warning is logged.
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum(axis=-1)
    bad = ~(np.isfinite(total) & (total > 0))
    if np.any(bad):
        if strict:
            raise DegenerateWeights(f"{int(bad.sum())} categorical draw(s) with all-zero weights")
        log.warning("falling back to prior weights for %d degenerate draw(s)", int(bad.sum()))
        weights = weights.copy()
        weights[bad] = 1.0 if fallback is None else np.broadcast_to(fallback, weights.shape)[bad]
        total = weights.sum(axis=-1)
    cdf = np.cumsum(weights, axis=-1)
    idx = (cdf < (u * total)[..., None]).sum(axis=-1)
    return np.minimum(idx, weights.shape[-1] - 1)


def sample_categorical_log(log_weights: np.ndarray, u: np.ndarray, strict: bool = True,
                           fallback: np.ndarray | None = None) -> np.ndarray:
    """Like :func:`sample_categorical` with unnormalized log weights."""
    log_weights = np.asarray(log_weights, dtype=float)
    mx = log_weights.max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        w = np.exp(log_weights - np.where(np.isfinite(mx), mx, 0.0))
    return sample_categorical(w, u, strict=strict, fallback=fallback)


def categorical_probabilities_log(log_weights: np.ndarray) -> np.ndarray:
    mx = log_weights.max(axis=-1, keepdims=True)
    w = np.exp(log_weights - mx)
    return w / w.sum(axis=-1, keepdims=True)


def sample_dirichlet(conc: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draws over the last axis, stable for tiny concentrations.

    Uses ``Gamma(a) = Gamma(a + 1) * U ** (1 / a)`` in log space; entries are
    floored at ``PROB_FLOOR`` so their logarithms stay finite.
    """
    conc = np.asarray(conc, dtype=float)
    log_g = np.log(rng.standard_gamma(conc + 1.0)) + np.log(_uniform(rng, conc.shape)) / conc
    log_g -= log_g.max(axis=-1, keepdims=True)
    p = np.exp(log_g)
    p /= p.sum(axis=-1, keepdims=True)
    p = np.maximum(p, PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


# ------------------------------------------------------------ profile block

def profile_assignment_logits(logf: np.ndarray, state: ModelState) -> np.ndarray:
    """(N, Z) unnormalized log P(s_i = z): log pi_z + sum_{r,t} log F(Y_irt | theta_c)."""
    Z, R, T = state.c.shape
    per = logf[:, np.arange(R)[None, :, None], np.arange(T)[None, None, :], state.c]
    return np.log(np.maximum(state.pi, PROB_FLOOR)) + per.sum(axis=(2, 3))


def update_profile_assignments(data, state: ModelState, hp: Hyperparameters,
                               rng: np.random.Generator, logf: np.ndarray | None = None,
                               strict: bool = True) -> np.ndarray:
    """Redraw every ``s_i`` from its categorical full conditional."""
    if logf is None:
        logf = log_density_table(_values(data), state.theta.mu, state.theta.sigma_sq, hp.likelihood)
    logits = profile_assignment_logits(logf, state)
    u = _uniform(rng, logits.shape[0])
    return sample_categorical_log(logits, u, strict=strict, fallback=state.pi)


def profile_evidence(logf_i: np.ndarray, omega: np.ndarray, a: np.ndarray) -> np.ndarray:
    """log p(Y_i | omega_z, a_z) with the profile's (c, gamma) summed out.

    ``logf_i`` is (R, T, K) for one subject; ``omega`` (Zs, K) and ``a``
    (Zs, T) are the rows of the candidate profiles.  Returns (Zs,).
    """
    Zs = omega.shape[0]
    R, T, K = logf_i.shape
    L = np.ascontiguousarray(np.broadcast_to(logf_i, (Zs, R, T, K)).reshape(Zs * R, T, K))
    w = np.ascontiguousarray(np.repeat(omega, R, axis=0), dtype=float)
    aa = np.ascontiguousarray(np.repeat(a, R, axis=0), dtype=float)
    return _kernels.log_evidence(L, w, aa).reshape(Zs, R).sum(axis=1)


def update_profile_assignments_collapsed(data, state: ModelState, hp: Hyperparameters,
                                         rng: np.random.Generator,
                                         logf: np.ndarray | None = None,
                                         strict: bool = True):
    """Sequential s_i update that sums out the sequences of empty profiles.

    For each subject the block (s_i, c and gamma of every profile left empty
    by the other subjects) is drawn from its joint conditional: occupied
    profiles are weighted by pi_z times the likelihood under their current
    sequences, empty ones by pi_z times the evidence with the sequence summed
    out.  If an empty profile is picked its sequence is drawn given Y_i;
    the remaining empty profiles get fresh prior sequences.

    Returns (s, c, gamma).
    """
    if logf is None:
        logf = log_density_table(_values(data), state.theta.mu, state.theta.sigma_sq, hp.likelihood)
    N, R, T, K = logf.shape
    s = state.s.astype(np.int64)
    c = state.c.astype(np.int64)
    gamma = state.gamma.astype(np.int8)
    log_pi = np.log(np.maximum(state.pi, PROB_FLOOR))
    u_s = _uniform(rng, N)
    u_seq = _uniform(rng, (N,) + c.shape)
    bad = _kernels.collapsed_profiles(np.ascontiguousarray(logf), s, c, gamma, log_pi,
                                      np.ascontiguousarray(state.omega, dtype=float),
                                      np.ascontiguousarray(state.a, dtype=float), u_s, u_seq)
    _check_degenerate(bad, strict)
    return s, c, gamma


def update_profile_probabilities(state: ModelState, hp: Hyperparameters,
                                 rng: np.random.Generator) -> np.ndarray:
    counts = np.bincount(state.s, minlength=hp.Z)
    return sample_dirichlet(state.zeta / hp.Z + counts, rng)


def dirichlet_multinomial_loglik(total_conc: float, counts: np.ndarray) -> float:
    """log p(labels | symmetric Dirichlet(total_conc / J)) with the probabilities integrated out."""
    counts = np.asarray(counts, dtype=float)
    J, n = counts.size, counts.sum()
    a = total_conc / J
    return float(gammaln(total_conc) - gammaln(n + total_conc)
                 + (gammaln(counts + a) - gammaln(a)).sum())


def update_concentration_mh(current: float, counts: np.ndarray, shape: float, rate: float,
                            rng: np.random.Generator, n_proposals: int = 1) -> tuple[float, int]:
    """Independence MH with Gamma(shape, rate) prior proposals.

    The target is the Dirichlet-multinomial likelihood of ``counts`` times the
    prior, so the acceptance ratio is the likelihood ratio.  Returns the new
    value and the number of accepted proposals.
    """
    value = float(current)
    ll = dirichlet_multinomial_loglik(value, counts)
    accepted = 0
    for _ in range(n_proposals):
        prop = float(rng.gamma(shape, 1.0 / rate))
        if prop <= 0:
            continue
        ll_prop = dirichlet_multinomial_loglik(prop, counts)
        if math.log(_uniform(rng, None)) <= ll_prop - ll:
            value, ll = prop, ll_prop
            accepted += 1
    return value, accepted


def n_mh_proposals(accepted: int, proposed: int) -> int:
    """Expected number of proposals for one acceptance, from a running rate estimate.

    The estimate starts at 0.25 (one pseudo-acceptance in four pseudo-proposals).
    """
    rate = (accepted + 1.0) / (proposed + 4.0)
    return min(MAX_PROPOSALS, math.ceil(1.0 / rate))


# -------------------------------------------------------------- state block

def fresh_draw_counts(state: ModelState) -> np.ndarray:
    """(Z, K) counts of freshly drawn states (gamma == 0); zero for inactive profiles."""
    Z, K = state.omega.shape
    fresh = state.gamma == 0
    flat = (np.arange(Z)[:, None, None] * K + state.c)[fresh]
    M = np.bincount(flat, minlength=Z * K).reshape(Z, K)
    M[state.profile_counts() == 0] = 0
    return M


def sample_table_counts(M: np.ndarray, omega0: np.ndarray, phi: float,
                        rng: np.random.Generator) -> np.ndarray:
    """CRF table counts: 0 where M is 0, else 1 plus one Bernoulli per extra customer."""
    M = np.asarray(M, dtype=np.int64)
    K = M.shape[-1]
    tables = (M > 0).astype(np.int64)
    zk = np.flatnonzero(M >= 2)
    if zk.size:
        extra = M.flat[zk] - 1
        owner = np.repeat(np.arange(zk.size), extra)
        starts = np.repeat(np.cumsum(extra) - extra, extra)
        m = np.arange(owner.size) - starts + 2
        w = phi * omega0[zk % K][owner]
        inc = rng.random(owner.size) < w / (w + m - 1)
        tables.flat[zk] += np.bincount(owner, weights=inc, minlength=zk.size).astype(np.int64)
    return tables


def update_global_state_probabilities(state: ModelState, hp: Hyperparameters,
                                      rng: np.random.Generator, M: np.ndarray | None = None,
                                      n_proposals: int = 1):
    """Tables, then eta by MH given the table counts, then omega0.

    Returns ``(omega0, eta, n_accepted, tables)``.
    """
    if M is None:
        M = fresh_draw_counts(state)
    tables = sample_table_counts(M, state.omega0, hp.phi, rng)
    tbar = tables.sum(axis=0)
    eta, acc = update_concentration_mh(state.eta, tbar, hp.d1, hp.d2, rng, n_proposals)
    omega0 = sample_dirichlet(eta / hp.K + tbar, rng)
    return omega0, eta, acc, tables


def update_profile_state_probabilities(state: ModelState, hp: Hyperparameters,
                                       rng: np.random.Generator,
                                       M: np.ndarray | None = None) -> np.ndarray:
    if M is None:
        M = fresh_draw_counts(state)
    return sample_dirichlet(hp.phi * state.omega0 + M, rng)


def _check_degenerate(bad: int, strict: bool) -> None:
    if bad:
        if strict:
            raise DegenerateWeights(f"{bad} state draw(s) with all-zero weights")
        log.warning("falling back to prior weights for %d degenerate state draw(s)", bad)


def _as_batch(L, w, a):
    """Flatten leading (Z, R) style dims into one batch axis for the kernels."""
    lead = L.shape[:-2]
    B = int(np.prod(lead)) if lead else 1
    T, K = L.shape[-2:]
    Lb = np.ascontiguousarray(L, dtype=float).reshape(B, T, K)
    wb = np.ascontiguousarray(np.broadcast_to(w, lead + (K,)), dtype=float).reshape(B, K)
    ab = np.ascontiguousarray(np.broadcast_to(a, lead + (T,)), dtype=float).reshape(B, T)
    return lead, Lb, wb, ab


def backward_messages(L: np.ndarray, omega_z: np.ndarray, a_z: np.ndarray) -> np.ndarray:
    """Log backward messages for one (profile, measurement) pair.

    ``L`` is the K x T log-likelihood matrix; returns a K x T matrix of log
    messages, each column shifted so its maximum is 0 (last column all 0).
    """
    _, Lb, wb, ab = _as_batch(np.asarray(L, dtype=float).T, omega_z, a_z)
    msg = np.empty_like(Lb)
    _kernels.backward(Lb, wb, ab, msg)
    return msg[0].T


def blocked_update_state_sequence(L: np.ndarray, messages: np.ndarray, omega_z: np.ndarray,
                                  a_z: np.ndarray, rng: np.random.Generator, strict: bool = True):
    """Forward pass drawing the whole (c, gamma) sequence of one (profile, measurement)."""
    _, Lb, wb, ab = _as_batch(np.asarray(L, dtype=float).T, omega_z, a_z)
    msg = np.ascontiguousarray(np.asarray(messages, dtype=float).T)[None]
    T = Lb.shape[1]
    c = np.empty((1, T), dtype=np.int64)
    g = np.empty((1, T), dtype=np.int8)
    bad = _kernels.forward(Lb, msg, wb, ab, _uniform(rng, (1, T)), c, g)
    _check_degenerate(bad, strict)
    return c[0], g[0]


def blocked_update_all(L: np.ndarray, omega: np.ndarray, a: np.ndarray, u: np.ndarray,
                       strict: bool = True, active=None):
    """Blocked update of every (z, r) sequence.

    ``L`` is (Z, R, T, K); ``omega`` (Z, K); ``a`` (Z, T); ``u`` (Z, R, T).
    Profiles flagged inactive (no subjects) are drawn from the prior directly.
    """
    lead, Lb, wb, ab = _as_batch(L, omega[:, None, :], a[:, None, :])
    Z, R = u.shape[:2]
    if active is None:
        active = np.ones(Z, dtype=bool)
    act = np.repeat(np.asarray(active, dtype=np.bool_), R)
    c = np.empty(ab.shape, dtype=np.int64)
    g = np.empty(ab.shape, dtype=np.int8)
    bad = _kernels.blocked(Lb, wb, ab, np.ascontiguousarray(u).reshape(ab.shape), c, g, act)
    _check_degenerate(bad, strict)
    return c.reshape(u.shape), g.reshape(u.shape)


def marginal_update_all(L: np.ndarray, omega: np.ndarray, a: np.ndarray, c: np.ndarray,
                        g: np.ndarray, u: np.ndarray, strict: bool = True):
    """One sequential single-site sweep (t = 1..T) over every (z, r) sequence.

    Each site draws (c_t, gamma_t) given c_{t-1}, c_{t+1} and gamma_{t+1}.
    """
    lead, Lb, wb, ab = _as_batch(L, omega[:, None, :], a[:, None, :])
    cb = np.array(c, dtype=np.int64).reshape(ab.shape)
    gb = np.array(g, dtype=np.int8).reshape(ab.shape)
    bad = _kernels.marginal_sweep(Lb, wb, ab, np.ascontiguousarray(u).reshape(ab.shape), cb, gb)
    _check_degenerate(bad, strict)
    return cb.reshape(c.shape), gb.reshape(c.shape)


def marginal_update_state_sequence(data, state: ModelState, z: int, r: int, t: int,
                                   rng: np.random.Generator, family=None):
    """Single-site Gibbs draw of ``(c[z, r, t], gamma[z, r, t])``; returns the pair."""
    family = NormalInvGamma() if family is None else family
    L = likelihood_matrix(data, state, z, r, family).T[None]
    _, Lb, wb, ab = _as_batch(L, state.omega[z], state.a[z])
    c = state.c[z, r][None].astype(np.int64)
    g = state.gamma[z, r][None].astype(np.int8)
    _check_degenerate(_kernels.marginal_site(Lb, wb, ab, float(_uniform(rng, None)), c, g, 0, t),
                      True)
    return int(c[0, t]), int(g[0, t])


def update_persistence_probabilities(state: ModelState, hp: Hyperparameters,
                                     rng: np.random.Generator) -> np.ndarray:
    Z, R, T = state.c.shape
    active = (state.profile_counts() > 0)[:, None]
    G = np.where(active, state.gamma.sum(axis=1), 0)
    n = np.where(active, R, 0)
    G[:, 0] = 0
    n = np.broadcast_to(n, G.shape).copy()
    n[:, 0] = 0
    return rng.beta(hp.alpha + G, hp.beta + n - G)


# --------------------------------------------------------- likelihood block

def sample_aux_variances(y, mu, sigma_sq, nu: float, rng: np.random.Generator) -> np.ndarray:
    """V ~ Inv-chi2(nu + 1, (nu * sigma_sq + (y - mu)^2) / (nu + 1)), elementwise."""
    y = np.asarray(y, dtype=float)
    return (nu * sigma_sq + (y - mu) ** 2) / rng.chisquare(nu + 1.0, size=y.shape)


def update_state_parameters(data, state: ModelState, hp: Hyperparameters,
                            rng: np.random.Generator):
    """Conditional draw of every (mu_k, sigma_sq_k); returns ``(theta, v)``.

    Normal family: mu | sigma_sq then sigma_sq | mu (Normal and Inverse-Gamma
    conditionals).  t family: V | theta, then mu | V and sigma_sq | V.
    States without observations are drawn from the prior.
    """
    y = _values(data)
    fam = hp.likelihood
    K = hp.K
    k = state.c[state.s]
    kf = k.ravel()
    yf = y.ravel()
    mu, s2 = state.theta.mu, state.theta.sigma_sq
    n = np.bincount(kf, minlength=K).astype(float)
    prior_prec = 1.0 / fam.sigma0_sq
    if isinstance(fam, StudentT):
        v = sample_aux_variances(y, mu[k], s2[k], fam.nu, rng)
        wf = 1.0 / v.ravel()
        prec = prior_prec + np.bincount(kf, weights=wf, minlength=K)
        mean = (fam.mu0 * prior_prec + np.bincount(kf, weights=wf * yf, minlength=K)) / prec
        new_mu = mean + rng.standard_normal(K) / np.sqrt(prec)
        shape = fam.shape + n * fam.nu / 2.0
        rate = fam.rate + fam.nu / 2.0 * np.bincount(kf, weights=wf, minlength=K)
        new_s2 = rng.gamma(shape, 1.0 / rate)
        return StateParameters(new_mu, np.maximum(new_s2, PROB_FLOOR)), v
    prec = prior_prec + n / s2
    mean = (fam.mu0 * prior_prec + np.bincount(kf, weights=yf, minlength=K) / s2) / prec
    new_mu = mean + rng.standard_normal(K) / np.sqrt(prec)
    ss = np.bincount(kf, weights=(yf - new_mu[kf]) ** 2, minlength=K)
    new_s2 = (fam.scale + ss / 2.0) / rng.standard_gamma(fam.shape + n / 2.0)
    return StateParameters(new_mu, new_s2), None


def _values(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


# ------------------------------------------------------------ initialization

def sample_trpm_prior(omega: np.ndarray, a: np.ndarray, R: int, rng: np.random.Generator):
    """Draw (c, gamma) for every profile from the temporal partition prior."""
    Z, T = a.shape
    L = np.zeros((Z, R, T, omega.shape[1]))
    return blocked_update_all(L, omega, a, _uniform(rng, (Z, R, T)),
                              active=np.zeros(Z, dtype=bool))


def init_state(data, hp: Hyperparameters, rng: np.random.Generator,
               init_mu=None, scheme: str = "prior") -> ModelState:
    """Starting state.

    ``scheme="prior"``: s and c uniform, gamma all zero, everything else from
    the prior.  ``scheme="informed"``: subject i starts in profile i mod Z and
    each (c, gamma) sequence is drawn from its conditional given the data, the
    starting theta and a, with uniform state probabilities.  This avoids the
    first profile update acting on pure-noise sequences.
    """
    y = _values(data)
    N, R, T = y.shape
    Z, K = hp.Z, hp.K
    fam = hp.likelihood
    zeta = float(rng.gamma(hp.b1, 1.0 / hp.b2))
    eta = float(rng.gamma(hp.d1, 1.0 / hp.d2))
    pi = sample_dirichlet(np.full(Z, zeta / Z), rng)
    omega0 = sample_dirichlet(np.full(K, eta / K), rng)
    omega = sample_dirichlet(np.broadcast_to(hp.phi * omega0, (Z, K)), rng)
    a = rng.beta(hp.alpha, hp.beta, size=(Z, T))
    s = rng.integers(0, Z, size=N)
    if scheme == "informed":
        s = np.arange(N) % Z
    c = rng.integers(0, K, size=(Z, R, T))
    gamma = np.zeros((Z, R, T), dtype=np.int8)
    if init_mu is not None:
        mu = np.asarray(init_mu, dtype=float).copy()
    else:
        mu = fam.mu0 + np.sqrt(fam.sigma0_sq) * rng.standard_normal(K)
    v = None
    if isinstance(fam, StudentT):
        s2 = rng.gamma(fam.shape, 1.0 / fam.rate, size=K)
    else:
        s2 = fam.scale / rng.standard_gamma(fam.shape, size=K)
    if scheme == "informed":
        L = profile_loglik(log_density_table(y, mu, s2, fam), s, Z)
        flat = np.full((Z, K), 1.0 / K)
        c, gamma = blocked_update_all(L, flat, a, _uniform(rng, c.shape))
    if isinstance(fam, StudentT):
        k = c[s]
        v = fam.nu * s2[k] / rng.chisquare(fam.nu, size=k.shape)
    return ModelState(s=s, pi=pi, zeta=zeta, omega0=omega0, eta=eta, omega=omega,
                      c=c, gamma=gamma, a=a, theta=StateParameters(mu, s2), v=v)


# ------------------------------------------------------------------- sweep

def gibbs_sweep(y: np.ndarray, state: ModelState, hp: Hyperparameters,
                rng: np.random.Generator, diagnostics: ChainDiagnostics,
                sampler: str = "blocked", strict: bool = False,
                profile_update: str = "collapsed") -> ModelState:
    """One full sweep; updates ``state`` in place and returns it."""
    Z, K = hp.Z, hp.K
    R = y.shape[1]
    acc = diagnostics.acceptance

    # profile block
    counts = np.bincount(state.s, minlength=Z)
    n_prop = n_mh_proposals(*acc["zeta"])
    state.zeta, n_acc = update_concentration_mh(state.zeta, counts, hp.b1, hp.b2, rng, n_prop)
    acc["zeta"][0] += n_acc
    acc["zeta"][1] += n_prop
    state.pi = update_profile_probabilities(state, hp, rng)
    logf = log_density_table(y, state.theta.mu, state.theta.sigma_sq, hp.likelihood)
    if profile_update == "collapsed":
        state.s, state.c, state.gamma = update_profile_assignments_collapsed(
            y, state, hp, rng, logf=logf, strict=strict)
    else:
        state.s = update_profile_assignments(y, state, hp, rng, logf=logf, strict=strict)

    # state block
    M = fresh_draw_counts(state)
    n_prop = n_mh_proposals(*acc["eta"])
    state.omega0, state.eta, n_acc, _ = update_global_state_probabilities(
        state, hp, rng, M=M, n_proposals=n_prop)
    acc["eta"][0] += n_acc
    acc["eta"][1] += n_prop
    state.omega = update_profile_state_probabilities(state, hp, rng, M=M)
    L = profile_loglik(logf, state.s, Z)
    u = _uniform(rng, state.c.shape)
    if sampler == "blocked":
        active = np.bincount(state.s, minlength=Z) > 0
        state.c, state.gamma = blocked_update_all(L, state.omega, state.a, u, strict=strict,
                                                  active=active)
    else:
        state.c, state.gamma = marginal_update_all(L, state.omega, state.a, state.c,
                                                   state.gamma, u, strict=strict)
    state.a = update_persistence_probabilities(state, hp, rng)

    # likelihood block
    state.theta, state.v = update_state_parameters(y, state, hp, rng)
    return state


def run_chain(data, config: RunConfig, seed: int | None = None, callback=None,
              keep_draws: bool = True) -> SampleChain:
    """Run one chain of ``config.n_iterations`` sweeps.

    ``callback(iteration, state)`` is invoked after every sweep (the state
    must not be mutated).  Retained draws are the post-burn-in sweeps at the
    configured thinning.
    """
    seed = config.seed if seed is None else seed
    y = _values(data)
    hp = config.hyperparameters
    state = init_state(y, hp, iteration_rng(seed, -1), config.init_mu,
                       config.init)
    diagnostics = ChainDiagnostics()
    draws, iterations = [], []
    for it in range(config.n_iterations):
        rng = iteration_rng(seed, it)
        try:
            gibbs_sweep(y, state, hp, rng, diagnostics, sampler=config.sampler,
                        profile_update=config.profile_update)
        except MMTBError as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc
        diagnostics.log_posterior_trace.append(joint_log_posterior(y, state, hp))
        if callback is not None:
            callback(it, state)
        if keep_draws and it >= config.burn_in and (it - config.burn_in + 1) % config.thinning == 0:
            draws.append(state.copy())
            iterations.append(it)
    return SampleChain(draws, iterations, diagnostics, config)


__all__ = [
    "DataTensor", "SampleChain", "ChainDiagnostics",
    "backward_messages", "blocked_update_state_sequence", "marginal_update_state_sequence",
    "update_profile_assignments", "update_profile_probabilities", "update_concentration_mh",
    "update_global_state_probabilities", "update_profile_state_probabilities",
    "update_persistence_probabilities", "update_state_parameters", "run_chain",
]
