import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from isomest import (DegenerateSample, DesignSample, InsufficientData, ScaleMethod,
                     bisquare_chi, estimate_scale, m_scale, parse_scale)
from isomest.scale import DEFAULT_B, DEFAULT_C, PHI_INV_3_4

C, B = DEFAULT_C, DEFAULT_B


def xi_root(b):
    """xi in (0, 1) with 1 - (1 - xi**2)**3 = b, by an independent root finder."""
    return optimize.brentq(lambda z: 1 - (1 - z * z) ** 3 - b, 0.0, 1.0, xtol=1e-15)


def test_chi_examples():
    assert bisquare_chi(0.0, C) == 0.0
    assert bisquare_chi(C, C) == 1.0
    assert bisquare_chi(5.0, C) == 1.0
    assert bisquare_chi(C / 2, C) == pytest.approx(37 / 64, abs=1e-15)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_chi_even_and_monotone(u, v):
    assert bisquare_chi(u, C) == bisquare_chi(-u, C)
    if abs(u) <= abs(v):
        assert bisquare_chi(u, C) <= bisquare_chi(v, C)


@pytest.mark.parametrize("a", [1e-3, 0.5, 1.0, 37.0])
def test_m_scale_alternating(a):
    xi = xi_root(B)
    # closed form of the root: xi**2 = 1 - 4**(-1/3)
    assert xi == pytest.approx(math.sqrt(1 - 4 ** (-1 / 3)), rel=1e-14)
    s = m_scale([a, -a, a, -a], C, B)
    assert s == pytest.approx(a / (C * xi), rel=1e-11)


def test_m_scale_objective_tolerance(rng):
    u = rng.standard_t(2, 301)
    s = m_scale(u, C, B)
    assert abs(np.mean(bisquare_chi(u / s, C)) - B) <= 1e-10


def test_m_scale_normal_calibration():
    u = np.random.default_rng(11).standard_normal(1_000_000)
    assert m_scale(u, C, B) == pytest.approx(1.0, abs=0.01)


def test_m_scale_degenerate():
    with pytest.raises(DegenerateSample):
        m_scale(np.zeros(10))
    with pytest.raises(DegenerateSample):
        m_scale([])
    # three of four nonzero is not more than b = 3/4
    with pytest.raises(DegenerateSample):
        m_scale([1.0, 2.0, 3.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), min_size=2, max_size=40),
       st.floats(1e-3, 1e3))
def test_m_scale_equivariant(values, lam):
    s = m_scale(values)
    assert m_scale(np.asarray(values) * lam) == pytest.approx(lam * s, rel=1e-10)
    assert m_scale(-np.asarray(values)) == s


def test_fixed_passthrough(rng):
    sample = DesignSample(np.arange(5.0), rng.standard_normal(5))
    assert estimate_scale(sample, ScaleMethod.fixed(2.5)).value == 2.5


@pytest.mark.parametrize("d", [0.1, 1.0, 4.0])
def test_diffm_constant_differences(d):
    t = np.arange(1, 21) / 21
    sample = DesignSample(t, 3.0 + d * np.arange(20))
    expected = d / (math.sqrt(2) * C * xi_root(B))
    assert estimate_scale(sample, ScaleMethod.diffm()).value == pytest.approx(expected, rel=1e-11)


def test_diffm_uses_design_order():
    t = np.array([3.0, 1.0, 2.0, 4.0, 5.0, 0.0])
    x = np.array([2.0, 0.5, 1.1, 2.2, 3.5, 0.0])
    shuffled = estimate_scale(DesignSample(t, x), ScaleMethod.diffm()).value
    order = np.argsort(t)
    assert shuffled == m_scale(np.diff(x[order])) / math.sqrt(2)


def test_diffm_needs_two_points():
    with pytest.raises(InsufficientData):
        estimate_scale(DesignSample([0.0], [1.0]), ScaleMethod.diffm())


def test_madl1_residuals():
    # (2, 1, 0) pools into one block with median 1, residuals (1, 0, -1)
    sample = DesignSample([1.0, 2.0, 3.0], [2.0, 1.0, 0.0])
    est = estimate_scale(sample, ScaleMethod.madl1())
    assert est.value == pytest.approx(1 / PHI_INV_3_4, rel=1e-15)
    assert est.value == pytest.approx(1.4826, abs=1e-4)


def test_madl1_degenerate_on_monotone_data():
    sample = DesignSample([1.0, 2.0, 3.0], [0.0, 1.0, 2.0])
    with pytest.raises(DegenerateSample):
        estimate_scale(sample, ScaleMethod.madl1())


@pytest.mark.parametrize("method", [ScaleMethod.diffm(), ScaleMethod.madl1()], ids=str)
def test_scale_equivariance(method, rng):
    for _ in range(20):
        n = int(rng.integers(5, 60))
        t = np.sort(rng.random(n))
        x = rng.standard_normal(n) + 2 * t
        a, lam = rng.normal(0, 10), rng.uniform(0.1, 10)
        base = estimate_scale(DesignSample(t, x), method).value
        moved = estimate_scale(DesignSample(t, a + lam * x), method).value
        assert moved == pytest.approx(lam * base, rel=1e-10)


@pytest.mark.parametrize("text, expected", [
    ("fixed:2.5", ScaleMethod.fixed(2.5)),
    ("diffm", ScaleMethod.diffm()),
    ("madl1", ScaleMethod.madl1()),
])
def test_parse_scale(text, expected):
    assert parse_scale(text) == expected
    assert str(expected) == text


def test_parse_scale_overrides_and_errors():
    assert parse_scale("diffm", c=1.0, b=0.5) == ScaleMethod.diffm(1.0, 0.5)
    for bad in ("fixed", "fixed:0", "fixed:-1", "mad", "diffm:2"):
        with pytest.raises(ValueError):
            parse_scale(bad)
    with pytest.raises(ValueError):
        ScaleMethod.diffm(b=1.0)
