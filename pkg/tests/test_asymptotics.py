import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from isomest import (ChernoffConfig, ConfigError, DomainError, ErrorModel, NonIdentifiable,
                     ScoreFamily, avar, efficiency_ratio, gcm, simulate_chernoff)
from isomest.asymptotics import parse_error_model, score_moments

NORMAL, T3 = ErrorModel.normal(), ErrorModel.student_t(3)


def huber_moments_normal(k):
    """Closed forms under N(0, 1)."""
    p = stats.norm.cdf(k) - stats.norm.cdf(-k)
    inner = p - 2 * k * stats.norm.pdf(k)  # integral of u^2 phi over |u| < k
    return inner + k * k * (1 - p), p


@pytest.mark.parametrize("k", [0.3, 0.98, 1.345, 3.0])
def test_huber_moments_closed_form(k):
    e2, e1 = score_moments(ScoreFamily.huber(k), NORMAL)
    want2, want1 = huber_moments_normal(k)
    assert e2 == pytest.approx(want2, rel=1e-9)
    assert e1 == pytest.approx(want1, rel=1e-9)


def test_huber_ratio_value():
    e2, e1 = huber_moments_normal(0.98)
    ratio = efficiency_ratio(ScoreFamily.huber(0.98), NORMAL)
    assert ratio == pytest.approx(e2 / e1**2, rel=1e-9)
    assert ratio == pytest.approx(1.1115, abs=5e-4)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_l2_ratio_is_variance(sigma):
    assert efficiency_ratio(ScoreFamily.l2(), ErrorModel.normal(sigma)) == pytest.approx(
        sigma**2, rel=1e-6)


def test_l2_ratio_t3_is_variance():
    assert efficiency_ratio(ScoreFamily.l2(), T3) == pytest.approx(3.0, rel=1e-6)


def test_sl1_limit_ratio():
    for model in (NORMAL, T3):
        g0 = float(model.pdf(0.0))
        want = 1 / (4 * g0 * g0)
        assert efficiency_ratio(ScoreFamily.smoothed_l1(1e6), model) == pytest.approx(want, rel=1e-4)
        assert efficiency_ratio(ScoreFamily.l1(), model) == pytest.approx(want, rel=1e-14)
    assert efficiency_ratio(ScoreFamily.l1(), NORMAL) == pytest.approx(math.pi / 2, rel=1e-14)


def test_sigma0_rescales(rng):
    f = ScoreFamily.huber(1.2)
    # psi(u / s) under N(0, 1) equals psi(u) under N(0, 1/s)
    a = score_moments(f, NORMAL, sigma0=2.0)
    b = score_moments(f, ErrorModel.normal(0.5), sigma0=1.0)
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_non_identifiable():
    # psi' vanishes outside |u| < 1e-18, where the errors carry no mass
    with pytest.raises(NonIdentifiable):
        efficiency_ratio(ScoreFamily.huber(1e-3), NORMAL, sigma0=1e-15)


def test_tabulated_model_matches_normal():
    grid = np.linspace(0, 12, 4001)
    model = ErrorModel.tabulated(grid, stats.norm.pdf(grid))
    for f in (ScoreFamily.l2(), ScoreFamily.huber(0.98)):
        assert efficiency_ratio(f, model) == pytest.approx(efficiency_ratio(f, NORMAL), rel=1e-5)


def test_tabulated_validation():
    with pytest.raises(ValueError):
        ErrorModel.tabulated([0.0, 1.0, 0.5], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        ErrorModel.tabulated([-1.0, 0.0, 2.0], [1.0, 1.0, 1.0])


def test_avar_examples():
    r = avar(ScoreFamily.l2(), NORMAL, 5.0, 1.0)
    assert r.kappa == pytest.approx(2.5, rel=1e-9)
    assert r.avar == 2.5 ** (2 / 3) * 1.04 or r.avar == pytest.approx(2.5 ** (2 / 3) * 1.04, rel=1e-9)
    assert r.avar == r.kappa ** (2 / 3) * r.var_chernoff
    assert round(r.avar, 2) == 1.92
    g0 = stats.t.pdf(0, 3)
    want = (5 / (8 * g0 * g0)) ** (2 / 3) * 1.04
    assert avar(ScoreFamily.l1(), T3, 5.0, 1.0).avar == pytest.approx(want, rel=1e-12)
    assert round(want, 2) == 2.89
    assert round(avar(ScoreFamily.huber(0.98), NORMAL, 5.0, 1.0).avar, 2) == 2.06


def test_avar_domain():
    with pytest.raises(DomainError):
        avar(ScoreFamily.l2(), NORMAL, 0.0, 1.0)
    with pytest.raises(DomainError):
        avar(ScoreFamily.l2(), NORMAL, 1.0, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.01, 50))
def test_avar_monotone_in_kappa(m1, m2):
    a1 = avar(ScoreFamily.l2(), NORMAL, m1, 1.0).avar
    a2 = avar(ScoreFamily.l2(), NORMAL, m2, 1.0).avar
    if m1 < m2:
        assert a1 < a2


def test_parse_error_model():
    assert parse_error_model("normal") == NORMAL
    assert parse_error_model("t3") == T3
    assert parse_error_model("t:df=3") == T3
    assert parse_error_model("normal:sigma=2") == ErrorModel.normal(2.0)
    assert str(T3) == "t:df=3.0"
    with pytest.raises(ValueError):
        parse_error_model("cauchy")


# --- greatest convex minorant ---------------------------------------------------


def brute_force_hull(v, z):
    """Vertices i such that no chord between other points passes strictly below (v_i, z_i),
    minus points lying on a chord (collinear)."""
    n = len(v)
    keep = []
    for i in range(n):
        below = False
        for a, b in itertools.combinations(range(n), 2):
            if a < i < b:
                w = (v[i] - v[a]) / (v[b] - v[a])
                if z[a] + w * (z[b] - z[a]) <= z[i]:
                    below = True
                    break
        if not below:
            keep.append(i)
    return keep


def test_gcm_matches_brute_force(rng):
    for _ in range(200):
        v = np.sort(rng.choice(np.linspace(-5, 5, 400), 20, replace=False))
        z = rng.standard_normal(20) + 0.2 * v**2
        h = gcm(v, z)
        want = brute_force_hull(v, z)
        np.testing.assert_array_equal(h.v, v[want])
        assert np.all(np.diff(h.slopes) > 0)
        assert np.all(h(v) <= z + 1e-12)


def test_gcm_collinear_and_parabola():
    v = np.linspace(0, 1, 11)
    h = gcm(v, 3 * v - 1)
    assert len(h) == 2
    assert h.slopes == pytest.approx([3.0])
    h = gcm(v, v**2)
    assert len(h) == 11
    h = gcm([(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)])
    assert h.v.tolist() == [0.0, 1.0, 2.0]


def test_gcm_slope_at_vertex_is_left():
    h = gcm([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0])
    assert h.slope_at(0.0) == -1.0
    assert h.slope_at(0.5) == 1.0
    assert h.slope_at(-3.0) == -1.0


def test_gcm_rejects():
    with pytest.raises(ValueError):
        gcm([0.0], [1.0])
    with pytest.raises(ValueError):
        gcm([0.0, 0.0], [1.0, 2.0])


# --- Chernoff simulation ---------------------------------------------------------


def test_zero_noise_slope_is_zero():
    s = simulate_chernoff(ChernoffConfig(reps=5, zero_noise=True))
    np.testing.assert_array_equal(s.slopes, np.zeros(5))


def test_chernoff_reproducible_and_chunk_free():
    cfg = ChernoffConfig(half_width=2.0, step=0.01, reps=300, seed=5)
    a = simulate_chernoff(cfg)
    b = simulate_chernoff(cfg, chunk=7)
    np.testing.assert_array_equal(a.slopes, b.slopes)
    c = simulate_chernoff(ChernoffConfig(half_width=2.0, step=0.01, reps=300, seed=6))
    assert not np.array_equal(a.slopes, c.slopes)


def test_chernoff_prefix_stable():
    a = simulate_chernoff(ChernoffConfig(half_width=2.0, step=0.01, reps=50, seed=1))
    b = simulate_chernoff(ChernoffConfig(half_width=2.0, step=0.01, reps=80, seed=1))
    np.testing.assert_array_equal(a.slopes, b.slopes[:50])


def test_chernoff_moments_small():
    s = simulate_chernoff(ChernoffConfig(reps=4000, seed=3))
    assert abs(s.mean) <= 3 * s.stderr
    assert 0.9 < s.var < 1.2
    assert set(s.summary()) >= {"mean", "var", "stderr", "var_stderr", "reps"}


@pytest.mark.parametrize("kwargs", [dict(half_width=1.0), dict(step=0.05), dict(reps=0),
                                    dict(half_width=3.0, step=0.007)])
def test_chernoff_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ChernoffConfig(**kwargs)
