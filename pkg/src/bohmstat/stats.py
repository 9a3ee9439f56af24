"""Finite-ensemble estimators and their comparison with Born moments."""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .guidance import velocity_field
from .propagate import (IntegratorConfig, Status, TrajectoryBatch, _resolve_kind, _rho_floor,
                        integrate_batch, propagate_ensemble)
from .sampling import SamplerConfig, sample_initial


class EstimatorError(ValueError):
    """Too few usable trajectories for an estimate."""


@dataclass(frozen=True)
class EnsembleResult:
    """Sample moments against Born moments on the output grid.

    Arrays have shape (T, d). ``stderr`` is std / sqrt(n_ok) and ``z`` is
    deviation / stderr, the deviation in units of the standard error.
    """

    times: np.ndarray
    sample_mean: np.ndarray
    sample_std: np.ndarray
    born_mean: np.ndarray
    born_std: np.ndarray
    n: int
    n_ok: int
    metadata: dict = field(default_factory=dict)

    @property
    def mean_deviation(self):
        return self.sample_mean - self.born_mean

    @property
    def std_deviation(self):
        return self.sample_std - self.born_std

    @property
    def stderr(self):
        return self.sample_std / math.sqrt(self.n_ok)

    @property
    def mean_z(self):
        return _ratio(self.mean_deviation, self.stderr)

    @property
    def std_z(self):
        return _ratio(self.std_deviation, self.stderr)

    @property
    def abort_fraction(self):
        return (self.n - self.n_ok) / self.n

    def max_abs_z(self):
        """Largest |z| over times and axes, for the mean and the std."""
        return float(np.max(np.abs(self.mean_z))), float(np.max(np.abs(self.std_z)))

    def within(self, k=4.0):
        zm, zs = self.max_abs_z()
        return zm < k and zs < k


def _ratio(num, den):
    # A zero standard error (identical samples) counts as agreement only
    # when the deviation vanishes too.
    with np.errstate(divide="ignore", invalid="ignore"):
        z = num / den
    return np.where(den > 0, z, np.where(num == 0, 0.0, np.inf))


def born_table(spec, times):
    """Born mean and std at each time, arrays of shape (T, d)."""
    moments = [spec.born_moments(float(t)) for t in times]
    return (np.array([m.mean for m in moments]), np.array([m.std for m in moments]))


def sample_moments(positions):
    """Mean and (N-1)-denominator std over axis 0 of (N, T, d) positions."""
    if positions.shape[0] < 2:
        raise EstimatorError("at least two trajectories are needed")
    return positions.mean(axis=0), positions.std(axis=0, ddof=1)


def ensemble_moments(trajectories, spec, seed=None, born=None):
    """Sample moments of the OK trajectories and the matching Born moments.

    NODE_ABORT and STEP_UNDERFLOW paths are excluded and counted.
    """
    batch = trajectories if isinstance(trajectories, TrajectoryBatch) \
        else TrajectoryBatch.from_trajectories(trajectories)
    ok = batch.ok_mask
    if ok.sum() < 2:
        raise EstimatorError(f"only {int(ok.sum())} OK trajectories")
    mean, std = sample_moments(batch.positions[ok])
    born_mean, born_std = born if born is not None else born_table(spec, batch.times)
    meta = dict(batch.metadata)
    meta.update(seed=seed, status_counts=batch.status_counts())
    return EnsembleResult(
        times=np.asarray(batch.times), sample_mean=mean, sample_std=std,
        born_mean=born_mean, born_std=born_std, n=len(batch), n_ok=int(ok.sum()),
        metadata=meta)


@dataclass(frozen=True)
class MomentumVariance:
    variance: np.ndarray
    n_used: int
    n_skipped: int


def classical_momentum_variance(trajectories, spec, t, kind=None, rho_floor=None):
    """Sample variance of M v(x_i(t), t) over the OK trajectories.

    ``t`` must be one of the output times. Points at or below the node
    floor are skipped and counted.
    """
    batch = trajectories if isinstance(trajectories, TrajectoryBatch) \
        else TrajectoryBatch.from_trajectories(trajectories)
    hits = np.flatnonzero(np.isclose(batch.times, t, rtol=0.0, atol=1e-12))
    if hits.size == 0:
        raise ValueError(f"t = {t} is not on the output grid")
    kind = _resolve_kind(spec, _dummy_cfg(), kind or batch.metadata.get("current"))
    x = batch.positions[batch.ok_mask, hits[0]]
    if rho_floor is None:
        rho_floor = batch.metadata.get("rho_floor", 0.0)
    v, rho = velocity_field(spec, x, np.full(x.shape[0], float(t)), kind)
    good = (rho > rho_floor) & np.all(np.isfinite(v), axis=-1)
    if good.sum() < 2:
        raise EstimatorError("fewer than two usable momentum samples")
    p = spec.constants.mass * v[good]
    return MomentumVariance(variance=p.var(axis=0, ddof=1), n_used=int(good.sum()),
                            n_skipped=int((~good).sum()))


def _dummy_cfg():
    return IntegratorConfig(times=(0.0,))


@dataclass(frozen=True)
class LyapunovEstimate:
    """Largest Lyapunov exponent from two-trajectory renormalization.

    ``lam`` is sum(log_stretch) / (len(log_stretch) * interval). ``shortened``
    is set when an abort cut the run before ``T``.
    """

    lam: float
    log_stretch: np.ndarray
    delta0: float
    interval: float
    T: float
    shortened: bool = False

    @property
    def running(self):
        """Running estimate after each renormalization."""
        k = np.arange(1, self.log_stretch.size + 1)
        return np.cumsum(self.log_stretch) / (k * self.interval)


def lyapunov(spec, x0, delta0, T, interval, cfg, direction=None, kind=None):
    """Benettin estimate from a reference and a shadow trajectory.

    Every ``interval`` the separation is measured, its log-stretch recorded
    and the shadow pulled back to distance ``delta0`` along the current
    separation direction.
    """
    kind = _resolve_kind(spec, cfg, kind)
    x0 = np.asarray(x0, dtype=float).reshape(spec.dim)
    if direction is None:
        direction = np.ones(spec.dim)
    direction = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    rho_floor = _rho_floor(spec, cfg)
    n_seg = int(round(T / interval))
    if n_seg < 1:
        raise ValueError("T must cover at least one renormalization interval")
    y = np.stack([x0, x0 + delta0 * direction])
    logs = []
    shortened = False
    for k in range(n_seg):
        t0 = k * interval
        res = integrate_batch(spec, y, t0, np.array([t0 + interval]), cfg, kind, rho_floor)
        if np.any(res["status"] != Status.OK):
            shortened = True
            break
        y = res["positions"][:, 0]
        sep = y[1] - y[0]
        dist = float(np.linalg.norm(sep))
        logs.append(math.log(dist / delta0))
        y[1] = y[0] + sep * (delta0 / dist)
    logs = np.array(logs)
    lam = float(logs.sum() / (logs.size * interval)) if logs.size else float("nan")
    return LyapunovEstimate(lam=lam, log_stretch=logs, delta0=delta0, interval=interval,
                            T=logs.size * interval, shortened=shortened)


@dataclass(frozen=True)
class ConvergenceTable:
    """Seed-averaged |sample mean - Born mean| against N and the fitted slope."""

    n_values: np.ndarray
    deviation: np.ndarray
    per_seed: np.ndarray
    slope: float
    intercept: float
    t_probe: float


def convergence_sweep(spec, n_values, seeds, cfg, t_probe, sampler=None):
    """Mean absolute deviation of the sample mean at ``t_probe`` versus N.

    For each N and seed a fresh ensemble is sampled and propagated. The
    deviation is the Euclidean norm over axes. The slope is a least-squares
    fit of log(deviation) against log(N).
    """
    n_values = np.asarray(sorted(int(n) for n in n_values))
    seeds = list(seeds)
    if n_values.size < 3 or n_values[-1] / n_values[0] < 100:
        raise ValueError("need at least three N values spanning two decades")
    if len(seeds) < 5:
        raise ValueError("need at least five seeds")
    sampler = sampler or SamplerConfig(n=1)
    pcfg = cfg.with_times([0.0, float(t_probe)]) if t_probe > 0 else cfg.with_times([0.0])
    born = spec.born_moments(float(t_probe)).mean
    per_seed = np.empty((n_values.size, len(seeds)))
    for i, n in enumerate(n_values):
        for j, seed in enumerate(seeds):
            x0 = sample_initial(spec, replace(sampler, n=int(n), seed=int(seed)))
            batch = propagate_ensemble(spec, x0, pcfg)
            pos = batch.positions[batch.ok_mask, -1]
            per_seed[i, j] = float(np.linalg.norm(pos.mean(axis=0) - born))
    deviation = per_seed.mean(axis=1)
    slope, intercept = np.polyfit(np.log(n_values), np.log(deviation), 1)
    return ConvergenceTable(n_values=n_values, deviation=deviation, per_seed=per_seed,
                            slope=float(slope), intercept=float(intercept), t_probe=float(t_probe))
