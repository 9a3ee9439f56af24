"""Adaptive integration of the guidance equation dx/dt = v(x, t).

Trajectories are advanced in lockstep over a batch, but every trajectory
keeps its own time, step size and controller history. All arithmetic is
elementwise, so a trajectory's result does not depend on which other
trajectories share its batch.
"""

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from enum import IntEnum
import hashlib
import json

import numpy as np

from .guidance import RHO_FLOOR_FACTOR, CurrentKind, check_current, default_current, velocity_field

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# Continuous extension of order 4 (coefficients of theta^1..theta^4).
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0


def _combine(coeffs, ks):
    # Fixed-order elementwise sum; BLAS reductions would depend on batch size.
    acc = coeffs[0] * ks[0]
    for j in range(1, len(coeffs)):
        if coeffs[j] != 0.0:
            acc = acc + coeffs[j] * ks[j]
    return acc


def _dense(ks, theta):
    th = theta[:, None]
    acc = 0.0
    for j in range(3, -1, -1):
        acc = (acc + _combine(_P[:, j], ks)) * th
    return acc


class Status(IntEnum):
    OK = 0
    NODE_ABORT = 1
    STEP_UNDERFLOW = 2


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bounds and the output time grid.

    ``rho_ref`` sets the node floor (1e-12 rho_ref); ``None`` means the
    state's reference density. ``max_steps`` bounds attempted steps per
    trajectory; exhausting it ends the trajectory with STEP_UNDERFLOW.
    """

    times: tuple
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    dt_init: float = 1e-3
    dt_min: float = 1e-8
    dt_max: float = 0.5
    current: str = None
    rho_ref: float = None
    max_steps: int = 2_000_000

    def __post_init__(self):
        times = tuple(float(v) for v in self.times)
        object.__setattr__(self, "times", times)
        if not times or times[0] != 0.0:
            raise ValueError("output grid must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("output grid must be strictly increasing")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.current is not None:
            object.__setattr__(self, "current", CurrentKind(self.current).value)

    def with_times(self, times):
        return replace(self, times=tuple(times))

    def digest(self):
        """sha256 of the canonical JSON form of the configuration."""
        text = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: Status
    n_accepted: int
    n_rejected: int
    min_dt: float
    t_last: float

    @property
    def ok(self):
        return self.status is Status.OK


@dataclass(frozen=True)
class TrajectoryBatch(Sequence):
    """Array-backed sequence of trajectories sharing one output grid.

    ``positions`` has shape (N, T, d); entries after an abort are NaN.
    """

    times: np.ndarray
    positions: np.ndarray
    status: np.ndarray
    n_accepted: np.ndarray
    n_rejected: np.ndarray
    min_dt: np.ndarray
    t_last: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return self.positions.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return Trajectory(
            times=self.times, positions=self.positions[i], status=Status(int(self.status[i])),
            n_accepted=int(self.n_accepted[i]), n_rejected=int(self.n_rejected[i]),
            min_dt=float(self.min_dt[i]), t_last=float(self.t_last[i]))

    @property
    def ok_mask(self):
        return self.status == Status.OK

    @property
    def n_ok(self):
        return int(np.sum(self.ok_mask))

    @property
    def abort_fraction(self):
        return (len(self) - self.n_ok) / len(self) if len(self) else 0.0

    def status_counts(self):
        return {s.name: int(np.sum(self.status == s)) for s in Status}

    def select(self, index):
        """Sub-batch for a slice, boolean mask or index array."""
        return TrajectoryBatch(
            times=self.times, positions=self.positions[index], status=self.status[index],
            n_accepted=self.n_accepted[index], n_rejected=self.n_rejected[index],
            min_dt=self.min_dt[index], t_last=self.t_last[index], metadata=dict(self.metadata))

    @classmethod
    def from_trajectories(cls, trajectories):
        trajectories = list(trajectories)
        return cls(
            times=trajectories[0].times,
            positions=np.stack([tr.positions for tr in trajectories]),
            status=np.array([int(tr.status) for tr in trajectories]),
            n_accepted=np.array([tr.n_accepted for tr in trajectories]),
            n_rejected=np.array([tr.n_rejected for tr in trajectories]),
            min_dt=np.array([tr.min_dt for tr in trajectories]),
            t_last=np.array([tr.t_last for tr in trajectories]),
        )


def _rho_floor(spec, cfg):
    rho_ref = cfg.rho_ref if cfg.rho_ref is not None else spec.reference_density()
    return RHO_FLOOR_FACTOR * rho_ref


def integrate_batch(spec, y0, t0, t_out, cfg, kind, rho_floor):
    """Advance trajectories from times ``t0`` through the output times ``t_out``.

    ``t_out`` is a shared increasing grid with ``t_out[0] >= max(t0)``.
    Returns a dict of arrays; positions at output times not reached are NaN.
    """
    y = np.array(y0, dtype=float, copy=True)
    n, d = y.shape
    t_out = np.asarray(t_out, dtype=float)
    n_out = t_out.size
    t_end = t_out[-1]
    t = np.broadcast_to(np.asarray(t0, dtype=float), (n,)).copy()
    out = np.full((n, n_out, d), np.nan)
    h = np.full(n, float(cfg.dt_init))
    err_old = np.full(n, 1e-4)
    status = np.zeros(n, dtype=int)
    accepted = np.zeros(n, dtype=np.int64)
    rejected = np.zeros(n, dtype=np.int64)
    min_dt = np.full(n, np.inf)
    nxt = np.zeros(n, dtype=np.int64)

    # Output times equal to the start time are filled directly.
    while True:
        hit = (nxt < n_out) & (t_out[np.minimum(nxt, n_out - 1)] <= t)
        if not hit.any():
            break
        idx = np.flatnonzero(hit)
        out[idx, nxt[idx]] = y[idx]
        nxt[idx] += 1

    k1, rho = velocity_field(spec, y, t, kind)
    bad0 = ~(rho > rho_floor) | ~np.all(np.isfinite(k1), axis=-1)
    status[bad0] = Status.NODE_ABORT
    active = (status == 0) & (nxt < n_out)
    k1 = np.where(bad0[:, None], 0.0, k1)

    while active.any():
        idx = np.flatnonzero(active)
        ti = t[idx]
        yi = y[idx]
        remaining = t_end - ti
        final = h[idx] >= remaining
        hi = np.where(final, remaining, h[idx])
        hcol = hi[:, None]

        ks = np.empty((7, idx.size, d))
        ks[0] = k1[idx]
        node_bad = np.zeros(idx.size, dtype=bool)
        for s in range(1, 6):
            ys = yi + hcol * _combine(_A[s], ks)
            ks[s], rho_s = velocity_field(spec, ys, ti + _C[s] * hi, kind)
            node_bad |= ~(rho_s > rho_floor)
        y_new = yi + hcol * _combine(_B, ks)
        t_new = np.where(final, t_end, ti + hi)
        ks[6], rho_s = velocity_field(spec, y_new, t_new, kind)
        node_bad |= ~(rho_s > rho_floor)
        node_bad |= ~np.all(np.isfinite(ks), axis=(0, 2))

        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(yi), np.abs(y_new))
        err_vec = hcol * _combine(_E, ks) / scale
        err = np.sqrt(np.mean(err_vec * err_vec, axis=-1))
        err = np.where(node_bad, np.inf, err)
        ok = err <= 1.0

        # Accepted steps: dense output, then PI step update.
        acc = idx[ok]
        if acc.size:
            a_loc = np.flatnonzero(ok)
            t_old = ti[a_loc]
            h_acc = hi[a_loc]
            k_acc = ks[:, a_loc]
            while True:
                pending = nxt[acc] < n_out
                tgt = t_out[np.minimum(nxt[acc], n_out - 1)]
                fill = pending & (tgt <= t_new[a_loc])
                if not fill.any():
                    break
                f_loc = np.flatnonzero(fill)
                theta = (tgt[f_loc] - t_old[f_loc]) / h_acc[f_loc]
                interp = yi[a_loc[f_loc]] + h_acc[f_loc, None] * _dense(k_acc[:, f_loc], theta)
                exact = tgt[f_loc] == t_new[a_loc[f_loc]]
                interp[exact] = y_new[a_loc[f_loc]][exact]
                out[acc[f_loc], nxt[acc[f_loc]]] = interp
                nxt[acc[f_loc]] += 1
            e_acc = np.maximum(err[a_loc], 1e-10)
            fac = _SAFETY * e_acc ** -_EXPO * err_old[acc] ** _BETA
            fac = np.clip(fac, _FAC_MIN, _FAC_MAX)
            t[acc] = t_new[a_loc]
            y[acc] = y_new[a_loc]
            k1[acc] = ks[6, a_loc]
            min_dt[acc] = np.minimum(min_dt[acc], h_acc)
            accepted[acc] += 1
            err_old[acc] = np.maximum(err[a_loc], 1e-4)
            h_next = h_acc * fac
            # Keep the controller's step when the final step was truncated.
            h_next = np.where(final[a_loc], np.maximum(h_next, h[acc]), h_next)
            h[acc] = np.minimum(h_next, cfg.dt_max)

        # Rejected steps: shrink; halve on node proximity.
        rej = idx[~ok]
        if rej.size:
            r_loc = np.flatnonzero(~ok)
            nb = node_bad[r_loc]
            shrink = np.where(
                nb, 0.5,
                np.maximum(_FAC_MIN, _SAFETY * np.maximum(err[r_loc], 1.0) ** -_EXPO))
            h[rej] = hi[r_loc] * shrink
            rejected[rej] += 1
            small = h[rej] < cfg.dt_min
            status[rej[small & nb]] = Status.NODE_ABORT
            status[rej[small & ~nb]] = Status.STEP_UNDERFLOW

        over = (accepted + rejected >= cfg.max_steps) & (status == 0)
        status[over & (nxt < n_out)] = Status.STEP_UNDERFLOW
        active = (status == 0) & (nxt < n_out)

    return {
        "positions": out, "status": status, "n_accepted": accepted,
        "n_rejected": rejected, "min_dt": np.where(np.isfinite(min_dt), min_dt, np.nan),
        "t_last": t, "y_last": y,
    }


def _resolve_kind(spec, cfg, kind):
    return check_current(spec, kind or cfg.current or default_current(spec))


def propagate_ensemble(spec, initial_positions, cfg, kind=None, chunk_size=20000):
    """Propagate every initial position over ``cfg.times``.

    Chunks are independent; element i is identical to ``propagate(spec,
    initial_positions[i], cfg)``. Failed trajectories are flagged in the
    status array, never raised.
    """
    kind = _resolve_kind(spec, cfg, kind)
    x0 = np.asarray(initial_positions, dtype=float).reshape(-1, spec.dim)
    rho_floor = _rho_floor(spec, cfg)
    times = np.asarray(cfg.times)
    parts = []
    for start in range(0, x0.shape[0], chunk_size):
        chunk = x0[start:start + chunk_size]
        parts.append(integrate_batch(spec, chunk, 0.0, times, cfg, kind, rho_floor))
    merged = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return TrajectoryBatch(
        times=times, positions=merged["positions"], status=merged["status"],
        n_accepted=merged["n_accepted"], n_rejected=merged["n_rejected"],
        min_dt=merged["min_dt"], t_last=merged["t_last"],
        metadata={"current": kind.value, "rho_floor": rho_floor})


def propagate(spec, x0, cfg, kind=None):
    """Integrate a single trajectory from ``x0`` at t = 0."""
    x0 = np.asarray(x0, dtype=float).reshape(1, spec.dim)
    return propagate_ensemble(spec, x0, cfg, kind=kind)[0]
