import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bohmstat.sampling import (EnvelopeError, SamplerConfig, SupportError, TabulatedCDF, allocate,
                               analytic_cdf, ks_critical, ks_statistic, sample_initial, uniforms)
from bohmstat.states import HOSuperposition
from bohmstat.states.quadrature import box_mass

from conftest import CATALOG, SCALAR


def test_uniforms_are_counter_based():
    u = uniforms(7, np.arange(10, dtype=np.uint64), 3)
    again = uniforms(7, np.arange(10, dtype=np.uint64), 3)
    np.testing.assert_array_equal(u, again)
    single = [uniforms(7, np.uint64(i), 3) for i in range(10)]
    np.testing.assert_array_equal(u, single)
    assert np.all((u >= 0) & (u < 1))
    assert not np.array_equal(u, uniforms(8, np.arange(10, dtype=np.uint64), 3))
    assert not np.array_equal(u, uniforms(7, np.arange(10, dtype=np.uint64), 4))


def test_uniforms_look_uniform():
    u = uniforms(0, np.arange(200_000, dtype=np.uint64), 0)
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)
    hist, _ = np.histogram(u, bins=20, range=(0, 1))
    chi2 = ((hist - u.size / 20) ** 2 / (u.size / 20)).sum()
    assert chi2 < 45  # 19 dof, p ~ 1e-3


def test_ground_state_moments():
    spec = HOSuperposition((0,), (1.0,))
    x = sample_initial(spec, SamplerConfig(n=100_000, seed=5))[:, 0]
    assert abs(x.mean()) < 4 * math.sqrt(0.5) / math.sqrt(x.size)
    assert x.var() == pytest.approx(0.5, rel=0.05)


@pytest.mark.parametrize("name", ["ho_01", "coherent", "free"])
def test_deterministic_and_prefix_stable(name):
    spec = CATALOG[name]
    a = sample_initial(spec, SamplerConfig(n=300, seed=11))
    b = sample_initial(spec, SamplerConfig(n=300, seed=11))
    np.testing.assert_array_equal(a, b)
    c = sample_initial(spec, SamplerConfig(n=100, seed=11))
    np.testing.assert_array_equal(a[:100], c)


def test_rejection_deterministic_in_3d():
    spec = CATALOG["nodal"]
    a = sample_initial(spec, SamplerConfig(n=200, seed=2))
    b = sample_initial(spec, SamplerConfig(n=200, seed=2))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (200, 3)


@pytest.mark.parametrize("name", sorted(SCALAR))
def test_single_sample_has_density(name):
    spec = SCALAR[name]
    x = sample_initial(spec, SamplerConfig(n=1, seed=123))
    assert x.shape == (1, spec.dim)
    assert spec.density(x, 0.0)[0] > 0


def test_no_sample_in_zero_density():
    spec = CATALOG["nodal"]
    x = sample_initial(spec, SamplerConfig(n=2000, seed=4))
    assert np.all(spec.density(x, 0.0) >= 1e-15 * spec.reference_density())


def test_sign_stratification_matches_half_space_mass():
    spec = CATALOG["nodal"]
    n = 1001
    x = sample_initial(spec, SamplerConfig(n=n, seed=1, stratify="sign_x"))
    lo, hi = np.full(3, -8.0), np.full(3, 8.0)
    mass_pos = box_mass(lambda p: spec.density(p, 0.0), np.array([0.0, -8, -8]), hi, order=64)
    mass_neg = box_mass(lambda p: spec.density(p, 0.0), lo, np.array([0.0, 8, 8]), order=64)
    expect = allocate(n, [mass_neg, mass_pos])
    assert int((x[:, 0] > 0).sum()) == expect[1]
    assert int((x[:, 0] < 0).sum()) == expect[0]


def test_stratified_and_plain_half_space_agree():
    spec = CATALOG["ho_01"]
    n = 100_000
    plain = sample_initial(spec, SamplerConfig(n=n, seed=9))[:, 0]
    strat = sample_initial(spec, SamplerConfig(n=n, seed=9, stratify=[0.0]))[:, 0]
    mass = box_mass(lambda p: spec.density(p, 0.0), np.array([0.0]), np.array([12.0]), order=256)
    se = math.sqrt(mass * (1 - mass) / n)
    assert abs((plain > 0).mean() - mass) < 3 * se
    assert abs((strat > 0).mean() - mass) < 3 * se


@given(st.integers(1, 10_000), st.lists(st.floats(0.01, 10.0), min_size=1, max_size=8))
@settings(max_examples=60, deadline=None)
def test_allocation_is_exact(n, masses):
    counts = allocate(n, masses)
    assert counts.sum() == n
    share = n * np.asarray(masses) / sum(masses)
    assert np.all(np.abs(counts - share) < 1.0)


@pytest.mark.parametrize("name", sorted(k for k, v in SCALAR.items() if v.dim == 1))
def test_inverse_cdf_passes_ks(name):
    spec = SCALAR[name]
    x = sample_initial(spec, SamplerConfig(n=10_000, seed=3))
    assert ks_statistic(x, spec) < ks_critical(x.shape[0], 0.01)


def test_ks_critical_value():
    assert ks_critical(10_000, 0.01) == pytest.approx(1.63 / 100, abs=2e-4)


def test_ks_extremes():
    spec = CATALOG["coherent"]
    cdf = analytic_cdf(spec)
    grid = cdf.inverse((np.arange(2000) + 0.5) / 2000)
    assert ks_statistic(grid, spec, cdf) < 1e-3
    assert ks_statistic(np.full(100, 1.0), spec, cdf) >= 0.5


def test_tabulated_cdf_inverse_round_trip():
    spec = CATALOG["ho_012"]
    cdf = analytic_cdf(spec)
    u = np.linspace(0.001, 0.999, 57)
    np.testing.assert_allclose(cdf(cdf.inverse(u)), u, atol=1e-9)


def test_rejection_agrees_with_inverse_cdf_in_1d():
    spec = CATALOG["ho_01"]
    x = sample_initial(spec, SamplerConfig(n=10_000, seed=3, method="rejection_nd"))
    assert ks_statistic(x, spec) < ks_critical(x.shape[0], 0.01)


def test_support_too_small():
    spec = CATALOG["coherent"]
    with pytest.raises(SupportError):
        sample_initial(spec, SamplerConfig(n=10, support=([0.0], [2.0])))


def test_bad_configs():
    with pytest.raises(ValueError):
        SamplerConfig(n=0)
    with pytest.raises(ValueError):
        SamplerConfig(n=5, stratify="sign_y")
    with pytest.raises(ValueError):
        SamplerConfig(n=5, stratify=[1.0, 0.0])
    with pytest.raises(ValueError):
        sample_initial(CATALOG["nodal"], SamplerConfig(n=5, method="inverse_cdf_1d"))


def test_tiny_acceptance_raises():
    # a unit-width packet in a box of side 80 accepts about 3e-5 of the draws
    spec = CATALOG["weak_field"]
    cfg = SamplerConfig(n=5, method="rejection_nd", support=([-40.0] * 3, [40.0] * 3))
    with pytest.raises(EnvelopeError):
        sample_initial(spec, cfg)
