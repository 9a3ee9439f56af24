import math

import numpy as np
import pytest

from bohmstat.propagate import IntegratorConfig, Status, TrajectoryBatch, propagate_ensemble
from bohmstat.sampling import SamplerConfig, sample_initial
from bohmstat.states import GaussianPacket, HOSuperposition, free_spread_sq
from bohmstat.stats import (EstimatorError, classical_momentum_variance, convergence_sweep,
                            ensemble_moments, lyapunov, sample_moments)

from conftest import CATALOG, FREE


def _constant_batch(values, times, status=None):
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    pos = np.repeat(values[:, None, :], len(times), axis=1)
    status = np.zeros(n, dtype=np.int8) if status is None else np.asarray(status, dtype=np.int8)
    return TrajectoryBatch(times=np.asarray(times, dtype=float), positions=pos, status=status,
                           n_accepted=np.zeros(n, dtype=int), n_rejected=np.zeros(n, dtype=int),
                           min_dt=np.zeros(n), t_last=np.zeros(n), metadata={})


def test_estimator_exactness():
    values = [[1.0], [2.0], [4.0], [8.0], [100.0]]
    batch = _constant_batch(values, [0.0, 1.0], status=[0, 0, 0, 0, Status.NODE_ABORT])
    spec = HOSuperposition((0,), (1.0,))
    res = ensemble_moments(batch, spec)
    assert res.n == 5 and res.n_ok == 4
    assert res.abort_fraction == 0.2
    np.testing.assert_array_equal(res.sample_mean, [[3.75], [3.75]])
    std = math.sqrt(((1 - 3.75) ** 2 + (2 - 3.75) ** 2 + (4 - 3.75) ** 2 + (8 - 3.75) ** 2) / 3)
    np.testing.assert_allclose(res.sample_std, [[std], [std]], rtol=1e-15)
    np.testing.assert_allclose(res.stderr, [[std / 2], [std / 2]], rtol=1e-15)
    np.testing.assert_allclose(res.born_std, math.sqrt(0.5), rtol=1e-15)
    np.testing.assert_allclose(res.mean_z, 3.75 / (std / 2), rtol=1e-14)


def test_estimator_needs_two_paths():
    spec = HOSuperposition((0,), (1.0,))
    with pytest.raises(EstimatorError):
        ensemble_moments(_constant_batch([[1.0], [2.0]], [0.0], status=[0, 1]), spec)
    with pytest.raises(EstimatorError):
        sample_moments(np.zeros((1, 2, 1)))


def test_eigenstate_std_is_constant():
    spec = HOSuperposition((2,), (1.0,))
    x0 = sample_initial(spec, SamplerConfig(n=300, seed=1))
    cfg = IntegratorConfig(times=tuple(np.linspace(0, 10, 11)))
    res = ensemble_moments(propagate_ensemble(spec, x0, cfg), spec)
    np.testing.assert_array_equal(res.sample_std, np.repeat(res.sample_std[:1], 11, axis=0))


def test_coherent_ensemble_tracks_cos():
    spec = GaussianPacket(1.0, 0.0, 0.5)
    x0 = sample_initial(spec, SamplerConfig(n=400, seed=0))
    cfg = IntegratorConfig(times=tuple(np.linspace(0, 10, 51)))
    res = ensemble_moments(propagate_ensemble(spec, x0, cfg), spec, seed=0)
    np.testing.assert_allclose(res.born_mean[:, 0], np.cos(res.times), atol=1e-13)
    assert res.within(4.0)
    assert res.metadata["seed"] == 0


def test_momentum_variance_eigenstate_and_coherent():
    cfg = IntegratorConfig(times=(0.0, 1.0, 2.0))
    eig = HOSuperposition((1,), (1.0,))
    batch = propagate_ensemble(eig, sample_initial(eig, SamplerConfig(n=200, seed=2)), cfg)
    mv = classical_momentum_variance(batch, eig, 1.0)
    assert mv.variance[0] == 0.0 and mv.n_used == 200
    coh = GaussianPacket(1.0, 0.0, 0.5)
    batch = propagate_ensemble(coh, sample_initial(coh, SamplerConfig(n=200, seed=2)), cfg)
    assert classical_momentum_variance(batch, coh, 2.0).variance[0] < 1e-20
    with pytest.raises(ValueError):
        classical_momentum_variance(batch, coh, 1.5)


def test_momentum_variance_free_packet():
    gamma2 = 0.5
    spec = GaussianPacket(0.0, 0.0, gamma2, FREE)
    n = 4000
    batch = propagate_ensemble(spec, sample_initial(spec, SamplerConfig(n=n, seed=6)),
                               IntegratorConfig(times=(0.0, 10.0)))
    var = classical_momentum_variance(batch, spec, 10.0).variance[0]
    # v = (x - q) d ln gamma(t)/dt, so Var(p) = (d gamma(t)/dt)^2
    g_t = math.sqrt(free_spread_sq(10.0, gamma2, 1.0, 1.0))
    expect = (10.0 / (4 * gamma2 * g_t)) ** 2
    assert var == pytest.approx(expect, rel=4 * math.sqrt(2 / n))
    assert expect == pytest.approx(1 / (4 * gamma2), rel=0.02)


def test_lyapunov_coherent_is_zero():
    spec = GaussianPacket(1.0, 0.0, 0.5)
    est = lyapunov(spec, [1.2], 1e-7, 50.0, 1.0, IntegratorConfig(times=(0.0,)))
    assert abs(est.lam) < 0.005
    assert est.log_stretch.size == 50 and not est.shortened
    assert est.running.shape == (50,)


def test_lyapunov_free_packet_bounded_by_spreading():
    spec = GaussianPacket(0.0, 0.0, 0.5, FREE)
    T = 40.0
    est = lyapunov(spec, [0.3], 1e-7, T, 1.0, IntegratorConfig(times=(0.0,)))
    bound = math.log(math.sqrt(free_spread_sq(T, 0.5, 1.0, 1.0) / 0.5)) / T
    assert est.lam == pytest.approx(bound, abs=1e-6)
    assert est.lam < 0.1


def test_lyapunov_rejects_short_run():
    with pytest.raises(ValueError):
        lyapunov(CATALOG["coherent"], [1.0], 1e-7, 0.2, 1.0, IntegratorConfig(times=(0.0,)))


def test_convergence_sweep_static_eigenstate():
    spec = HOSuperposition((0,), (1.0,))
    cfg = IntegratorConfig(times=(0.0,))
    table = convergence_sweep(spec, [10, 100, 1000], range(5), cfg, t_probe=3.0)
    for i, n in enumerate(table.n_values):
        for j, seed in enumerate(range(5)):
            x0 = sample_initial(spec, SamplerConfig(n=int(n), seed=seed))
            assert table.per_seed[i, j] == pytest.approx(abs(x0.mean()), abs=1e-15)


def test_convergence_sweep_coherent_scaling():
    spec = GaussianPacket(1.0, 0.0, 0.5)
    table = convergence_sweep(spec, [100, 1000, 10_000], range(8), IntegratorConfig(times=(0.0,)),
                              t_probe=2.0)
    assert -0.75 < table.slope < -0.25
    ratio = table.deviation[0] / table.deviation[-1]
    assert 100 ** 0.5 / 2 < ratio < 2 * 100 ** 0.5


def test_convergence_sweep_requirements():
    spec = CATALOG["coherent"]
    cfg = IntegratorConfig(times=(0.0,))
    with pytest.raises(ValueError):
        convergence_sweep(spec, [10, 100], range(5), cfg, 1.0)
    with pytest.raises(ValueError):
        convergence_sweep(spec, [10, 100, 500], range(5), cfg, 1.0)
    with pytest.raises(ValueError):
        convergence_sweep(spec, [10, 100, 1000], range(4), cfg, 1.0)
