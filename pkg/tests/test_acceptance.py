"""End-to-end acceptance checks.

Each test prints one ``criterion N [PASS|FAIL]`` line, also collected in the
terminal summary.  The scenario fits take roughly 20 minutes and the sampler
comparison roughly 12 minutes on one core.

    pytest tests/test_acceptance.py -v
"""

import filecmp
import math
import time

import numpy as np
import pytest
from oracles import brute_binder, empirical, enumerate_sequences, total_variation
from scipy import integrate, stats

from mmtb.cli import main
from mmtb.evaluation import blocked_dominance, compare_replicate, default_hyperparameters
from mmtb.model import (NormalInvGamma, StateParameters, StudentT, log_density,
                        log_density_table)
from mmtb.pipeline import pooled_draws, run_fit
from mmtb.sampler import (blocked_update_all, marginal_update_all, run_chain,
                          update_persistence_probabilities, update_profile_probabilities,
                          update_profile_state_probabilities)
from mmtb.simulator import replicate_seed, simulate_scenario
from mmtb.summaries import coclustering_matrix, evaluate_draws, expected_binder, \
    minimize_expected_binder
from mmtb.tensor_io import (DataTensor, RunConfig, read_long_csv, read_samples, write_long_csv,
                            write_samples)

pytestmark = pytest.mark.slow

SCENARIOS = ("time_dep", "subject_dep", "both")
N_REPLICATES = 10


# ------------------------------------------------------------ 1: exact posterior

def _small_instance():
    y = np.array([0.2, 1.1, -0.4])
    fam = NormalInvGamma()
    L = log_density_table(y, np.array([0.0, 1.0]), np.array([1.0, 0.5]), fam)   # (T, K)
    return L, np.array([0.35, 0.65]), np.array([0.0, 0.55, 0.7])


def test_exact_posterior_equivalence(report):
    t0 = time.perf_counter()
    L, w, a = _small_instance()
    exact, _ = enumerate_sequences(L, w, a)
    T, K = L.shape
    rng = np.random.default_rng(2024)

    n = 200_000
    c, g = blocked_update_all(np.broadcast_to(L, (1, n, T, K)), w[None], a[None],
                              1.0 - rng.random((1, n, T)))
    tv_blocked = total_variation(empirical(c[0], g[0]), exact)

    # 1000 independent chains x 1000 single-site sweeps = 1M sweeps
    chains, sweeps, warm = 1000, 1000, 10
    Lb = np.broadcast_to(L, (1, chains, T, K))
    c = np.zeros((1, chains, T), dtype=np.int64)
    g = np.zeros((1, chains, T), dtype=np.int8)
    keys = np.zeros(((sweeps - warm) * chains,), dtype=np.int64)
    for it in range(sweeps):
        c, g = marginal_update_all(Lb, w[None], a[None], c, g, 1.0 - rng.random((1, chains, T)))
        if it >= warm:
            # encode (c, gamma) rows as integers for cheap counting
            code = (c[0] * K ** np.arange(T)).sum(axis=1) * 2 ** T + (g[0] * 2 ** np.arange(T)).sum(axis=1)
            keys[(it - warm) * chains:(it - warm + 1) * chains] = code
    uniq, counts = np.unique(keys, return_counts=True)
    emp = {}
    for code, cnt in zip(uniq, counts):
        cc, gg = divmod(int(code), 2 ** T)
        ckey = tuple((cc // K ** t) % K for t in range(T))
        gkey = tuple((gg >> t) & 1 for t in range(T))
        emp[ckey, gkey] = cnt / len(keys)
    tv_marginal = total_variation(emp, exact)
    elapsed = time.perf_counter() - t0

    ok = tv_blocked < 0.01 and tv_marginal < 0.02 and elapsed < 120
    report(1, "exact posterior equivalence", ok,
           f"TV blocked {tv_blocked:.4f} (< 0.01), marginal {tv_marginal:.4f} (< 0.02), "
           f"{elapsed:.0f}s (< 120s)")
    assert ok


# --------------------------------------------------- 2 and 3: scenario recovery

@pytest.fixture(scope="module")
def scenario_metrics():
    """Metrics of 10 replicates per scenario, 3 chains x 5k iterations each.

    Only the metrics are kept; the pooled draws are dropped after scoring.
    """
    t0 = time.perf_counter()
    hp = default_hyperparameters()
    out = {}
    for sc in SCENARIOS:
        rows = []
        for rep in range(1, N_REPLICATES + 1):
            seed = replicate_seed(0, rep)
            data, truth = simulate_scenario(sc, seed)
            cfg = RunConfig(hp, n_iterations=5000, burn_in=2500, n_chains=3, seed=seed)
            draws = pooled_draws(run_fit(data, cfg, jobs=1))
            rows.append(evaluate_draws(draws, truth))
            del draws
        out[sc] = {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}
    return out, time.perf_counter() - t0


def test_subject_partition_recovery(scenario_metrics, report):
    metrics, elapsed = scenario_metrics
    limits = {"time_dep": 0.05, "subject_dep": 0.05, "both": 0.10}
    got = {sc: metrics[sc]["subject_bl"] for sc in SCENARIOS}
    ok = all(got[sc] <= limits[sc] for sc in SCENARIOS) and elapsed < 1800
    report(2, "subject partition BL", ok,
           ", ".join(f"{sc} {got[sc]:.3f} (<= {limits[sc]})" for sc in SCENARIOS)
           + f", {elapsed / 60:.1f} min (< 30)")
    assert ok


def test_measurement_metrics(scenario_metrics, report):
    metrics, _ = scenario_metrics
    targets = {
        "measurement_bl": ((0.08, 0.09, 0.04), 0.05),
        "mae": ((0.73, 1.00, 0.48), 0.3),
        "f_measure": ((0.73, 0.89, 0.88), 0.10),
    }
    parts, ok = [], True
    for key, (centres, tol) in targets.items():
        for sc, centre in zip(SCENARIOS, centres):
            v = metrics[sc][key]
            hit = abs(v - centre) <= tol
            ok &= hit
            parts.append(f"{key}/{sc} {v:.3f} ({centre}+-{tol}){'' if hit else ' MISS'}")
    report(3, "measurement BL, MAE, f-measure", ok, "; ".join(parts))
    assert ok


# ----------------------------------------------------- 4: blocked vs marginal

def test_blocked_beats_marginal(report):
    t0 = time.perf_counter()
    runs = []
    for rep in range(1, N_REPLICATES + 1):
        runs.extend(compare_replicate("both", 1, rep, 10_000))
    elapsed = time.perf_counter() - t0
    frac = blocked_dominance(runs)
    ok = all(v >= 0.8 for v in frac.values()) and elapsed < 3600
    report(4, "blocked versus marginal", ok,
           ", ".join(f"{k} {v:.0%}" for k, v in frac.items())
           + f" of replicates (>= 80%), {elapsed / 60:.1f} min (< 60)")
    assert ok


# ------------------------------------------------------- 5: conjugate updates

class _State:
    """Just the fields the conjugate updates read."""

    def __init__(self, **kw):
        self.__dict__.update(kw)

    def profile_counts(self):
        return np.bincount(self.s, minlength=len(self.pi))


def _within(draws, mean, var, n_se=3.0):
    se = np.sqrt(var / len(draws))
    return np.abs(draws.mean(axis=0) - mean) <= n_se * se


def test_conjugate_updates(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    n = 50_000
    results = []
    for _ in range(5):
        Z, K = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        hp = default_hyperparameters(Z=Z, K=K, phi=float(rng.uniform(0.2, 2.0)),
                                     alpha=float(rng.uniform(1, 12)),
                                     beta=float(rng.uniform(1, 5)))

        # profile probabilities: Dirichlet(zeta / Z + counts)
        s = rng.integers(0, Z, size=int(rng.integers(1, 30)))
        st = _State(s=s, zeta=float(rng.uniform(0.2, 3.0)), pi=np.full(Z, 1 / Z))
        conc = st.zeta / Z + np.bincount(s, minlength=Z)
        d = np.array([update_profile_probabilities(st, hp, rng) for _ in range(n)])
        tot = conc.sum()
        results.append(_within(d, conc / tot, conc * (tot - conc) / (tot ** 2 * (tot + 1))).all())

        # state probabilities: Dirichlet(phi * omega0 + M) per profile
        omega0 = rng.dirichlet(np.ones(K))
        M = rng.integers(0, 8, size=(Z, K))
        M[0] = 0
        st = _State(omega0=omega0)
        conc = hp.phi * omega0 + M
        d = np.array([update_profile_state_probabilities(st, hp, rng, M=M) for _ in range(n)])
        tot = conc.sum(axis=1, keepdims=True)
        results.append(_within(d, conc / tot,
                               conc * (tot - conc) / (tot ** 2 * (tot + 1))).all())

        # persistence: Beta(alpha + G, beta + R - G) for t >= 2 of occupied profiles
        R, T = int(rng.integers(1, 6)), int(rng.integers(2, 6))
        s = rng.integers(0, Z, size=4)
        gamma = (rng.random((Z, R, T)) < 0.6).astype(np.int8)
        gamma[:, :, 0] = 0
        st = _State(s=s, pi=np.full(Z, 1 / Z), gamma=gamma, c=np.zeros((Z, R, T), dtype=int))
        occupied = (np.bincount(s, minlength=Z) > 0)[:, None]
        G = gamma.sum(axis=1)
        A = np.where(occupied, hp.alpha + G, hp.alpha)
        B = np.where(occupied, hp.beta + R - G, hp.beta)
        A[:, 0], B[:, 0] = hp.alpha, hp.beta
        d = np.array([update_persistence_probabilities(st, hp, rng) for _ in range(n)])
        mean = A / (A + B)
        var = A * B / ((A + B) ** 2 * (A + B + 1))
        results.append(_within(d, mean, var).all())
    elapsed = time.perf_counter() - t0
    ok = all(results) and elapsed < 60
    report(5, "conjugate updates", ok,
           f"{sum(results)}/{len(results)} configurations within 3 SE, {elapsed:.0f}s (< 60s)")
    assert ok


# ------------------------------------------------------------ 6: scale mixture

def test_scale_mixture_identity(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        y, mu = rng.normal(0, 3, size=2)
        s2 = float(rng.uniform(0.1, 5.0))
        nu = float(rng.choice([1.0, 2.5, 3.0, 7.0, 30.0]))
        mix = stats.invgamma(nu / 2, scale=nu * s2 / 2)
        f = lambda v: stats.norm.pdf(y, mu, math.sqrt(v)) * mix.pdf(v)
        # split at the mode of the integrand for a stable adaptive quadrature
        val = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-11, limit=400)[0]
                  for lo, hi in ((0, s2), (s2, 50 * s2), (50 * s2, np.inf)))
        got = math.exp(log_density(y, 0, StateParameters(np.array([mu]), np.array([s2])),
                                   StudentT(nu=nu)))
        worst = max(worst, abs(got - val) / val)
    ok = worst < 1e-4
    report(6, "t density as scale mixture", ok, f"max relative error {worst:.2e} (< 1e-4)")
    assert ok


# ------------------------------------------------------- 7: partition optimum

def test_partition_optimizer(report):
    rng = np.random.default_rng(7)
    misses = 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        draws = rng.integers(0, n + 1, size=(int(rng.integers(1, 30)), n))
        a = float(rng.choice([1.0, rng.uniform(0.5, 2.0)]))
        best, _ = brute_binder(draws, a, 1.0)
        P = coclustering_matrix(draws)
        est = minimize_expected_binder(draws, a, 1.0)
        if expected_binder(P, est.labels, a, 1.0) > expected_binder(P, best, a, 1.0) + 1e-12:
            misses += 1
    ok = misses == 0
    report(7, "partition optimizer", ok, f"{100 - misses}/100 draw sets at the enumerated optimum")
    assert ok


# ------------------------------------------------------------ 8: determinism

def test_fit_determinism(tmp_path, report):
    data = tmp_path / "both_1.csv"
    write_long_csv(simulate_scenario("both", 8)[0], data)
    base = ["fit", "--data", str(data), "--chains", "3", "--iterations", "200", "--seed", "5"]
    for name, jobs in (("a", "1"), ("b", "8"), ("c", "1")):
        assert main(base + ["--jobs", jobs, "--out", str(tmp_path / name)]) == 0
    files = sorted(p.name for p in (tmp_path / "a" / "samples").iterdir())
    same_jobs = filecmp.cmpfiles(tmp_path / "a" / "samples", tmp_path / "b" / "samples", files,
                                 shallow=False)[0]
    rerun = filecmp.cmpfiles(tmp_path / "a" / "samples", tmp_path / "c" / "samples", files,
                             shallow=False)[0]
    ok = len(files) == 6 and len(same_jobs) == len(rerun) == len(files)
    report(8, "determinism", ok,
           f"{len(same_jobs)}/{len(files)} files identical for --jobs 1 vs 8, "
           f"{len(rerun)}/{len(files)} identical on rerun")
    assert ok


# ------------------------------------------------------ fMRI-shaped workload

def test_fmri_shape_budget(tmp_path, capsys):
    """23 subjects x 11 networks x 78 scans with the robust likelihood, 10k iterations."""
    rng = np.random.default_rng(23)
    N, R, T = 23, 11, 78
    level = rng.choice([-1.0, 0.0, 1.0], size=(3, R, T // 6)).repeat(6, axis=2)
    y = level[np.arange(N) % 3] + 0.4 * rng.standard_t(3, size=(N, R, T))
    write_long_csv(DataTensor(y), tmp_path / "scan.csv")
    data = read_long_csv(tmp_path / "scan.csv")
    assert data.shape == (N, R, T)

    hp = default_hyperparameters(Z=N, K=13, likelihood=StudentT(3.0, 0.0, 3.0, 5.0, 10.0))
    cfg = RunConfig(hp, n_iterations=10_000, burn_in=5000, thinning=50, n_chains=1, seed=1,
                    init_mu=np.arange(-1.5, 1.51, 0.25))
    t0 = time.perf_counter()
    chain = run_chain(data, cfg)
    elapsed = time.perf_counter() - t0
    write_samples(chain, tmp_path / "chain1.ndjson")
    back = read_samples(tmp_path / "chain1.ndjson")
    assert len(back) == 100
    assert back.draws[-1].c.shape == (N, R, T) and back.draws[-1].v.shape == (N, R, T)
    assert np.isfinite(back.diagnostics.log_posterior_trace).all()
    with capsys.disabled():
        print(f"\nfMRI-shaped chain: {elapsed / 60:.1f} min for 10k iterations (< 20)")
    assert elapsed < 1200


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
