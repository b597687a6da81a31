"""Latent variables, hyperparameters, likelihoods and the joint log-posterior.

Array layout used throughout the package (0-based labels):

* ``s``      -- (N,)        profile label per subject
* ``c``      -- (Z, R, T)   state label per profile, measurement and time step
* ``gamma``  -- (Z, R, T)   persistence indicators, ``gamma[:, :, 0] == 0``
* ``a``      -- (Z, T)      persistence probabilities (column 0 unused)
* ``omega``  -- (Z, K)      profile-specific state probabilities
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import gammaln

LOG_2PI = float(np.log(2.0 * np.pi))
# Smallest positive normal double; probability vectors are floored here so
# that their logarithms stay finite.
PROB_FLOOR = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class NormalInvGamma:
    """Normal likelihood with independent Normal / Inverse-Gamma priors.

    ``mu_k ~ Normal(mu0, sigma0_sq)`` and ``sigma_sq_k ~ InvGamma(shape, scale)``.
    """

    mu0: float = 0.0
    sigma0_sq: float = 5.0
    shape: float = 30.0
    scale: float = 30.0

    name = "normal_invgamma"

    def __post_init__(self):
        _check_positive(self, ("sigma0_sq", "shape", "scale"))


@dataclass(frozen=True)
class StudentT:
    """Location-scale t likelihood, ``nu`` fixed.

    ``mu_k ~ Normal(mu0, sigma0_sq)`` and ``sigma_sq_k ~ Gamma(shape, rate)``.
    """

    nu: float = 3.0
    mu0: float = 0.0
    sigma0_sq: float = 3.0
    shape: float = 5.0
    rate: float = 10.0

    name = "student_t"

    def __post_init__(self):
        _check_positive(self, ("sigma0_sq", "shape", "rate"))
        if not self.nu >= 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")


Likelihood = Union[NormalInvGamma, StudentT]
LIKELIHOODS = {NormalInvGamma.name: NormalInvGamma, StudentT.name: StudentT}


def _check_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not (np.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be a positive real, got {value!r}")


@dataclass(frozen=True)
class Hyperparameters:
    Z: int
    K: int
    b1: float = 50.0
    b2: float = 100.0
    d1: float = 50.0
    d2: float = 100.0
    phi: float = 0.5
    alpha: float = 10.0
    beta: float = 2.0
    likelihood: Likelihood = field(default_factory=NormalInvGamma)

    def __post_init__(self):
        if int(self.Z) < 1 or int(self.K) < 1:
            raise ValueError("Z and K must be positive integers")
        _check_positive(self, ("b1", "b2", "d1", "d2", "phi", "alpha", "beta"))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["likelihood"] = {"family": self.likelihood.name,
                             **dataclasses.asdict(self.likelihood)}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        d = dict(d)
        lik = dict(d.pop("likelihood", {"family": NormalInvGamma.name}))
        family = lik.pop("family", NormalInvGamma.name)
        if family not in LIKELIHOODS:
            raise ValueError(f"unknown likelihood family {family!r}")
        return cls(likelihood=LIKELIHOODS[family](**lik), **d)


@dataclass
class StateParameters:
    mu: np.ndarray
    sigma_sq: np.ndarray

    def copy(self) -> "StateParameters":
        return StateParameters(self.mu.copy(), self.sigma_sq.copy())


@dataclass
class ModelState:
    s: np.ndarray
    pi: np.ndarray
    zeta: float
    omega0: np.ndarray
    eta: float
    omega: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    a: np.ndarray
    theta: StateParameters
    v: np.ndarray | None = None

    @property
    def Z(self) -> int:
        return self.omega.shape[0]

    @property
    def K(self) -> int:
        return self.omega.shape[1]

    def copy(self) -> "ModelState":
        return ModelState(
            s=self.s.copy(), pi=self.pi.copy(), zeta=float(self.zeta),
            omega0=self.omega0.copy(), eta=float(self.eta), omega=self.omega.copy(),
            c=self.c.copy(), gamma=self.gamma.copy(), a=self.a.copy(),
            theta=self.theta.copy(), v=None if self.v is None else self.v.copy(),
        )

    def profile_counts(self) -> np.ndarray:
        return np.bincount(self.s, minlength=self.Z)

    def check(self, tol: float = 1e-10) -> None:
        """Raise ``AssertionError`` if a structural invariant is violated."""
        for name, p in (("pi", self.pi), ("omega0", self.omega0), ("omega", self.omega)):
            assert np.all(p >= 0), f"{name} has negative entries"
            assert np.allclose(p.sum(axis=-1), 1.0, atol=tol, rtol=0), f"{name} not normalized"
        assert np.all(self.gamma[:, :, 0] == 0), "gamma at t=1 must be 0"
        stay = self.gamma[:, :, 1:] == 1
        assert np.all(self.c[:, :, 1:][stay] == self.c[:, :, :-1][stay]), "gamma/c inconsistent"
        assert np.all((self.a >= 0) & (self.a <= 1)), "a outside [0, 1]"
        assert np.all(self.theta.sigma_sq > 0), "non-positive sigma_sq"
        assert np.all((self.s >= 0) & (self.s < self.Z))
        assert np.all((self.c >= 0) & (self.c < self.K))


def _values(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


# ---------------------------------------------------------------- likelihoods

def log_density_table(y, mu, sigma_sq, family: Likelihood) -> np.ndarray:
    """Log density of every ``y`` under every state; shape ``y.shape + (K,)``."""
    y = np.asarray(y, dtype=float)[..., None]
    mu = np.asarray(mu, dtype=float)
    sigma_sq = np.asarray(sigma_sq, dtype=float)
    if isinstance(family, StudentT):
        nu = family.nu
        const = (gammaln((nu + 1) / 2) - gammaln(nu / 2)
                 - 0.5 * np.log(nu * np.pi * sigma_sq))
        return const - (nu + 1) / 2 * np.log1p((y - mu) ** 2 / (nu * sigma_sq))
    return -0.5 * (LOG_2PI + np.log(sigma_sq) + (y - mu) ** 2 / sigma_sq)


def log_density(y: float, k: int, theta: StateParameters, family: Likelihood) -> float:
    """``log F(y | theta_k)``."""
    return log_density_table(y, theta.mu[k], theta.sigma_sq[k], family).item()


def profile_loglik(logf: np.ndarray, s: np.ndarray, Z: int) -> np.ndarray:
    """Sum per-subject log densities by profile.

    ``logf`` has shape (N, R, T, K); the result has shape (Z, R, T, K) and is
    zero for profiles without subjects.
    """
    N = logf.shape[0]
    onehot = np.zeros((Z, N))
    onehot[s, np.arange(N)] = 1.0
    return (onehot @ logf.reshape(N, -1)).reshape((Z,) + logf.shape[1:])


def likelihood_matrix(data, state: ModelState, z: int, r: int, family: Likelihood) -> np.ndarray:
    """K x T matrix of summed log densities of measurement ``r`` over the subjects in profile ``z``."""
    y = _values(data)[state.s == z, r, :]
    table = log_density_table(y, state.theta.mu, state.theta.sigma_sq, family)
    return table.sum(axis=0).T


# ------------------------------------------------------------- log densities

def log_dirichlet(p: np.ndarray, conc: np.ndarray) -> np.ndarray:
    """Dirichlet log density over the last axis."""
    p = np.maximum(p, PROB_FLOOR)
    return (gammaln(conc.sum(axis=-1)) - gammaln(conc).sum(axis=-1)
            + ((conc - 1.0) * np.log(p)).sum(axis=-1))


def log_gamma_pdf(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) + (shape - 1) * np.log(x) - rate * x


def log_invgamma_pdf(x, shape, scale):
    return shape * np.log(scale) - gammaln(shape) - (shape + 1) * np.log(x) - scale / x


def log_beta_pdf(x, a, b):
    with np.errstate(divide="ignore"):
        return (gammaln(a + b) - gammaln(a) - gammaln(b)
                + (a - 1) * np.log(x) + (b - 1) * np.log1p(-x))


def trpm_log_prob(c: np.ndarray, gamma: np.ndarray, omega: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Log probability of each profile's (c, gamma) sequences; shape (Z,)."""
    log_w = np.log(np.maximum(omega, PROB_FLOOR))
    lw = _gather_state(log_w, c)
    with np.errstate(divide="ignore"):
        log_a = np.log(a)[:, None, 1:]
        log_1ma = np.log1p(-a)[:, None, 1:]
    g = gamma[:, :, 1:].astype(bool)
    later = np.where(g, log_a, log_1ma + lw[:, :, 1:])
    return lw[:, :, 0].sum(axis=1) + later.sum(axis=(1, 2))


def _gather_state(per_state: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``per_state[z, c[z, r, t]]`` for a (Z, K) table and (Z, R, T) labels."""
    Z = c.shape[0]
    return per_state[np.arange(Z)[:, None, None], c]


def state_of_cells(state: ModelState) -> np.ndarray:
    """(N, R, T) state label of every observation, ``c[s_i, r, t]``."""
    return state.c[state.s]


def observation_loglik(data, state: ModelState, family: Likelihood) -> float:
    y = _values(data)
    k = state_of_cells(state)
    mu = state.theta.mu[k]
    s2 = state.theta.sigma_sq[k]
    return float(_elementwise_logf(y, mu, s2, family).sum())


def _elementwise_logf(y, mu, sigma_sq, family):
    if isinstance(family, StudentT):
        nu = family.nu
        return (gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(nu * np.pi * sigma_sq)
                - (nu + 1) / 2 * np.log1p((y - mu) ** 2 / (nu * sigma_sq)))
    return -0.5 * (LOG_2PI + np.log(sigma_sq) + (y - mu) ** 2 / sigma_sq)


def state_parameter_log_prior(theta: StateParameters, family: Likelihood) -> float:
    lp = -0.5 * (LOG_2PI + np.log(family.sigma0_sq) + (theta.mu - family.mu0) ** 2 / family.sigma0_sq)
    if isinstance(family, StudentT):
        lp = lp + log_gamma_pdf(theta.sigma_sq, family.shape, family.rate)
    else:
        lp = lp + log_invgamma_pdf(theta.sigma_sq, family.shape, family.scale)
    return float(lp.sum())


def joint_log_posterior(data, state: ModelState, hp: Hyperparameters) -> float:
    """Unnormalized joint log posterior of the current configuration.

    Profile-level terms (``omega[z]``, the state sequences and ``a[z]``) are
    counted for active profiles only; inactive profiles carry prior refreshes
    that the sampler never conditions on.  ``a[:, 0]`` is unused and excluded.
    Under the t likelihood the auxiliary variances are integrated out.
    """
    Z, K = hp.Z, hp.K
    active = state.profile_counts() > 0
    lp = observation_loglik(data, state, hp.likelihood)
    lp += float(np.log(np.maximum(state.pi[state.s], PROB_FLOOR)).sum())
    lp += float(log_dirichlet(state.pi, np.full(Z, state.zeta / Z)))
    lp += float(log_dirichlet(state.omega0, np.full(K, state.eta / K)))
    conc = hp.phi * np.maximum(state.omega0, PROB_FLOOR)
    lp += float(log_dirichlet(state.omega[active], np.broadcast_to(conc, (active.sum(), K))).sum())
    lp += float(trpm_log_prob(state.c[active], state.gamma[active], state.omega[active],
                              state.a[active]).sum())
    lp += float(log_beta_pdf(state.a[active][:, 1:], hp.alpha, hp.beta).sum())
    lp += float(log_gamma_pdf(state.zeta, hp.b1, hp.b2) + log_gamma_pdf(state.eta, hp.d1, hp.d2))
    lp += state_parameter_log_prior(state.theta, hp.likelihood)
    return lp
