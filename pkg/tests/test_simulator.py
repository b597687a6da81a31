import numpy as np
import pytest
from scipy import stats

from mmtb.simulator import (STATE_MEANS, GroundTruth, Scenario, read_truth, replicate_seed,
                            simulate_scenario, simulate_to_dir, write_truth)
from mmtb.summaries import canonical_labels


def test_shapes():
    for sc in Scenario:
        data, truth = simulate_scenario(sc, 1)
        assert data.shape == (6, 5, 30)
        assert truth.true_c.shape == truth.true_means.shape == (6, 5, 30)


def test_time_dep_redraw_times():
    _, truth = simulate_scenario("time_dep", 3)
    fresh = np.flatnonzero(truth.true_gamma[0, 0] == 0) + 1
    assert fresh.tolist() == [1, 6, 11, 16, 21, 26]
    assert np.all(truth.true_gamma == truth.true_gamma[:1, :1])
    assert len(np.unique(truth.subject_partition)) == 6


def test_measurement_partition_changes():
    for sc, n in (("time_dep", 1), ("both", 2)):
        _, truth = simulate_scenario(sc, 5)
        parts = {tuple(canonical_labels(truth.true_c[0, :, t])) for t in range(30)}
        changes = sum(tuple(canonical_labels(truth.true_c[0, :, t]))
                      != tuple(canonical_labels(truth.true_c[0, :, t - 1])) for t in range(1, 30))
        assert changes == n
        assert len(parts) >= 2


def test_profile_structure():
    for sc in ("subject_dep", "both"):
        _, truth = simulate_scenario(sc, 2)
        assert truth.subject_partition.tolist() == [0, 0, 0, 0, 1, 1]
        assert np.array_equal(truth.true_c[0], truth.true_c[3])
        assert np.array_equal(truth.true_c[4], truth.true_c[5])
    _, truth = simulate_scenario("subject_dep", 2)
    assert np.all(truth.true_gamma == 0)


def test_deterministic_and_seed_sensitive():
    a, _ = simulate_scenario("both", 11)
    b, _ = simulate_scenario("both", 11)
    c, _ = simulate_scenario("both", 12)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_states_are_uniform():
    counts = np.zeros(10)
    for seed in range(40):
        _, truth = simulate_scenario("subject_dep", seed)
        counts += np.bincount(truth.true_c[[0, 4]].ravel(), minlength=10)
    assert stats.chisquare(counts).pvalue > 0.001


def test_state_means_recovered():
    ys, cs = [], []
    for seed in range(10):
        data, truth = simulate_scenario("subject_dep", seed)
        ys.append(data.values.ravel())
        cs.append(truth.true_c.ravel())
    y, c = np.concatenate(ys), np.concatenate(cs)
    for k in range(10):
        assert abs(y[c == k].mean() - STATE_MEANS[k]) < 0.5
    assert np.allclose(truth.true_means, STATE_MEANS[truth.true_c])


def test_changepoints_exclude_first_step():
    _, truth = simulate_scenario("both", 4)
    cp = truth.true_changepoints()
    assert np.all(cp[:, :, 0] == 0)
    assert np.array_equal(cp[:, :, 1:], 1 - truth.true_gamma[:, :, 1:])


def test_truth_round_trip(tmp_path):
    _, truth = simulate_scenario("time_dep", 9)
    write_truth(truth, tmp_path / "t.truth")
    back = read_truth(tmp_path / "t.truth")
    assert isinstance(back, GroundTruth) and back.scenario == "time_dep"
    for name in ("subject_partition", "true_c", "true_gamma", "true_means"):
        assert np.array_equal(getattr(back, name), getattr(truth, name))


def test_simulate_to_dir(tmp_path):
    paths = simulate_to_dir("both", 3, 2, tmp_path)
    assert [p.name for p in paths] == ["both_1.csv", "both_2.csv"]
    assert (tmp_path / "both_2.truth").exists()
    assert replicate_seed(3, 2) != replicate_seed(3, 1)


def test_unknown_scenario():
    with pytest.raises(ValueError):
        Scenario.parse("nope")
