import numpy as np
import pytest

from isomest import ErrorModel, ExperimentConfig, run_experiment, table1
from isomest.montecarlo import Estimator, default_estimators, simulate_estimates

NORMAL, T3 = ErrorModel.normal(), ErrorModel.student_t(3)


def test_config_defaults():
    cfg = ExperimentConfig(n=100, error=NORMAL)
    assert cfg.target == 11.25
    assert cfg.design[0] == 1 / 101 and cfg.design[-1] == 100 / 101
    assert [e.name for e in cfg.estimators] == ["L2", "L1", "M"]
    m = default_estimators()[2]
    assert str(m.family) == "huber:k=0.98" and str(m.scale) == "diffm"


@pytest.mark.parametrize("kwargs", [dict(n=1), dict(replications=0), dict(t0=1.0),
                                    dict(trend="cubic")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**dict(dict(n=10, error=NORMAL), **kwargs))


def test_zero_noise_bias_only():
    cfg = ExperimentConfig(n=500, error=ErrorModel.no_noise(), replications=2)
    table = run_experiment(cfg)
    for row in table.rows:
        assert 0 <= row.scaled_mse < 0.05
    # the estimate is the trend at the last design point left of t0
    est = table.estimates[("L2", "none", 500)]
    assert est[0] == 10 + 5 * (250 / 501) ** 2


def test_reproducible_and_seed_sensitive():
    cfg = ExperimentConfig(n=60, error=T3, replications=30, seed=4)
    a = simulate_estimates(cfg)
    np.testing.assert_array_equal(a, simulate_estimates(cfg))
    np.testing.assert_array_equal(a, simulate_estimates(cfg, chunk=7))
    other = simulate_estimates(ExperimentConfig(n=60, error=T3, replications=30, seed=5))
    assert not np.array_equal(a, other)


def test_workers_do_not_change_results():
    cfg = ExperimentConfig(n=50, error=NORMAL, replications=40, seed=8)
    np.testing.assert_array_equal(simulate_estimates(cfg, workers=1, chunk=10),
                                  simulate_estimates(cfg, workers=2, chunk=10))


def test_split_halves():
    full = ExperimentConfig(n=80, error=NORMAL, replications=40, seed=3)
    half = ExperimentConfig(n=80, error=NORMAL, replications=20, seed=3)
    a, b = simulate_estimates(full), simulate_estimates(half)
    # replicate r depends only on (seed, stream, r): the first half is a prefix
    np.testing.assert_array_equal(a[:20], b)
    sq = (a - 11.25) ** 2
    halves = 0.5 * (sq[:20].mean(axis=0) + sq[20:].mean(axis=0))
    np.testing.assert_allclose(halves, sq.mean(axis=0), rtol=1e-13)


def test_pairing_shares_errors():
    cfg = ExperimentConfig(n=30, error=NORMAL, replications=5, seed=1,
                           estimators=default_estimators()[:1] * 2)
    est = simulate_estimates(cfg)
    np.testing.assert_array_equal(est[:, 0], est[:, 1])


def test_run_experiment_rows():
    cfg = ExperimentConfig(n=100, error=NORMAL, replications=25, seed=2)
    table = run_experiment(cfg)
    for row in table.rows:
        assert row.scaled_mse >= 0 and row.mc_stderr > 0 and row.n == 100
    assert table.get("M", "normal", 100).estimator == "M"
    with pytest.raises(KeyError):
        table.get("M", "normal", 7)


def test_table1_layout():
    table = table1(seed=1, reps=3, sizes=(40,))
    assert len(table.rows) == 6
    assert {r.error for r in table.rows} == {"normal", "t:df=3.0"}
    assert all(r.avar is not None for r in table.rows)
    assert table.get("L2", "normal", 40).avar == pytest.approx(2.5 ** (2 / 3) * 1.04)
    lines = table.to_csv().splitlines()
    assert lines[0] == "estimator,error,n,scaled_mse,mc_stderr,avar" and len(lines) == 7
    assert len(table.to_dict()["rows"]) == 6
    # each cell uses its own stream
    assert not np.array_equal(table.estimates[("L2", "normal", 40)],
                              table.estimates[("L2", "t:df=3.0", 40)])


def test_custom_estimator():
    from isomest import ScaleMethod, ScoreFamily
    est = (Estimator("SL1", ScoreFamily.smoothed_l1(20.0), ScaleMethod.madl1()),)
    table = run_experiment(ExperimentConfig(n=50, error=NORMAL, replications=5, estimators=est))
    assert [r.estimator for r in table.rows] == ["SL1"]
