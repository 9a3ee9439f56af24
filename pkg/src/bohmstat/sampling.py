"""Reproducible sampling of initial positions from |psi(x, 0)|^2.

Random numbers come from a counter-based stream: the k-th uniform of sample
i under seed s is a SplitMix64 hash of (s, i, k). Any sample can therefore
be regenerated alone, and results never depend on batch size or worker
count.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import optimize, stats
from scipy.interpolate import CubicHermiteSpline

from .states.quadrature import box_mass

RNG_NAME = "splitmix64-counter"
SUPPORT_SIGMAS = 8.0
SUPPORT_MASS_TOL = 1e-9
MIN_ACCEPTANCE = 1e-4
ZERO_DENSITY_FACTOR = 1e-15
ENVELOPE_MARGIN = 1.01

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM = np.uint64(0xD1B54A32D192ED03)


class SamplingError(RuntimeError):
    pass


class EnvelopeError(SamplingError):
    """Rejection sampling accepted too few proposals."""


class SupportError(ValueError):
    """The support box misses more probability than allowed."""


class SamplingMethod(str, Enum):
    INVERSE_CDF_1D = "inverse_cdf_1d"
    REJECTION_ND = "rejection_nd"


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniforms(seed, index, counter):
    """Uniforms in [0, 1) for each (sample index, counter) pair.

    ``index`` and ``counter`` broadcast against each other. The stream of
    sample i is mix(mix(seed + golden) ^ i * C) and its k-th draw is
    mix(stream + (k + 1) * golden), keeping the top 53 bits.
    """
    with np.errstate(over="ignore"):
        key = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        idx = np.asarray(index, dtype=np.uint64)
        ctr = np.asarray(counter, dtype=np.uint64)
        stream = _mix64(key ^ (idx * _STREAM))
        bits = _mix64(stream + (ctr + np.uint64(1)) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(float) * 2.0 ** -53


@dataclass(frozen=True)
class SamplerConfig:
    """How to draw the initial ensemble.

    ``stratify`` is ``None``, a sorted list of interior cell boundaries (1D)
    or ``"sign_x"`` (3D). ``support`` is ``(lo, hi)`` per axis; ``None``
    means mean +- 8 Born standard deviations at t = 0. ``method=None``
    picks inverse CDF in 1D and rejection otherwise.
    """

    n: int
    seed: int = 0
    method: str = None
    stratify: object = None
    support: tuple = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.method is not None:
            object.__setattr__(self, "method", SamplingMethod(self.method).value)
        if isinstance(self.stratify, str):
            if self.stratify != "sign_x":
                raise ValueError("the only named stratification is 'sign_x'")
        elif self.stratify is not None:
            cuts = tuple(float(v) for v in self.stratify)
            if any(b <= a for a, b in zip(cuts, cuts[1:])):
                raise ValueError("stratification boundaries must be strictly increasing")
            object.__setattr__(self, "stratify", cuts)
        if self.support is not None:
            lo, hi = (tuple(float(v) for v in np.atleast_1d(s)) for s in self.support)
            if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
                raise ValueError("support must be (lo, hi) with lo < hi on every axis")
            object.__setattr__(self, "support", (lo, hi))


def default_support(spec):
    born = spec.born_moments(0.0)
    half = SUPPORT_SIGMAS * born.std
    return born.mean - half, born.mean + half


def _resolve_support(spec, cfg):
    if cfg.support is None:
        lo, hi = default_support(spec)
    else:
        lo, hi = (np.asarray(s, dtype=float) for s in cfg.support)
    if lo.size != spec.dim:
        raise ValueError(f"support has {lo.size} axes, state has {spec.dim}")
    return lo, hi


def state_mass(spec, lo, hi):
    """Mass of rho(., 0) in a box, integrated over its overlap with mean +- 16 std.

    Catalog densities are Gaussians times polynomials, so the clipped tails
    carry far less than 1e-30 of the mass while a fixed-order rule over a
    needlessly wide box would miss the peak.
    """
    born = spec.born_moments(0.0)
    lo = np.maximum(np.asarray(lo, dtype=float), born.mean - 16.0 * born.std)
    hi = np.minimum(np.asarray(hi, dtype=float), born.mean + 16.0 * born.std)
    if np.any(hi <= lo):
        return 0.0
    return box_mass(lambda x: spec.density(x, 0.0), lo, hi, order=64 if spec.dim > 1 else 256)


def check_support(spec, lo, hi):
    """Mass of ``rho(., 0)`` inside the box; raises when it is too small."""
    mass = state_mass(spec, lo, hi)
    if mass < 1.0 - SUPPORT_MASS_TOL:
        raise SupportError(f"support box holds mass {mass:.12f} < 1 - {SUPPORT_MASS_TOL:g}")
    return mass


class TabulatedCDF:
    """Cumulative distribution of a 1D density on [lo, hi].

    Cell masses come from Gauss-Legendre rules; between nodes the CDF is a
    cubic Hermite interpolant whose slopes are the exact density. The grid
    is doubled until the interpolant matches the integrated CDF at cell
    midpoints to ``tol``.
    """

    def __init__(self, density, lo, hi, min_cells=4096, tol=1e-8, max_cells=2 ** 20):
        self.lo, self.hi = float(lo), float(hi)
        self._density = density
        cells = min_cells
        while True:
            x = np.linspace(self.lo, self.hi, cells + 1)
            cum = np.concatenate([[0.0], np.cumsum(self._cell_mass(x[:-1], x[1:]))])
            spline = CubicHermiteSpline(x, cum, density(x))
            mid = 0.5 * (x[:-1] + x[1:])
            exact_mid = cum[:-1] + self._cell_mass(x[:-1], mid)
            err = float(np.max(np.abs(spline(mid) - exact_mid)))
            if err < tol * cum[-1] or cells >= max_cells:
                break
            cells *= 2
        self.grid = x
        self.total = float(cum[-1])
        self.values = cum / self.total
        self.interp_error = err / self.total
        self._spline = CubicHermiteSpline(x, self.values, density(x) / self.total)

    def _cell_mass(self, a, b, order=8):
        nodes, weights = np.polynomial.legendre.leggauss(order)
        half = 0.5 * (b - a)
        pts = 0.5 * (a + b)[:, None] + half[:, None] * nodes
        return half * (self._density(pts) @ weights)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = self._spline(np.clip(x, self.lo, self.hi))
        return np.clip(np.where(x < self.lo, 0.0, np.where(x > self.hi, 1.0, inside)), 0.0, 1.0)

    def inverse(self, u, iterations=56):
        """Quantiles by bisection inside the bracketing cell.

        A fixed iteration count keeps each quantile independent of the batch.
        """
        u = np.asarray(u, dtype=float)
        cell = np.clip(np.searchsorted(self.values, u, side="right") - 1, 0, self.grid.size - 2)
        a = self.grid[cell].copy()
        b = self.grid[cell + 1].copy()
        for _ in range(iterations):
            m = 0.5 * (a + b)
            below = self._spline(m) < u
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return 0.5 * (a + b)


def allocate(n, masses):
    """Split ``n`` samples over cells proportionally (largest remainder)."""
    masses = np.asarray(masses, dtype=float)
    quota = n * masses / masses.sum()
    counts = np.floor(quota).astype(int)
    short = n - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _cells(spec, cfg, lo, hi):
    """Axis-aligned sub-boxes covering the support."""
    if cfg.stratify is None:
        return [(lo, hi)]
    if cfg.stratify == "sign_x":
        if spec.dim != 3:
            raise ValueError("sign_x stratification needs a 3D state")
        cut = min(max(0.0, lo[0]), hi[0])
        left_hi, right_lo = hi.copy(), lo.copy()
        left_hi[0] = right_lo[0] = cut
        return [(lo, left_hi), (right_lo, hi)]
    if spec.dim != 1:
        raise ValueError("boundary stratification is one-dimensional")
    edges = [lo[0]] + [c for c in cfg.stratify if lo[0] < c < hi[0]] + [hi[0]]
    return [(np.array([a]), np.array([b])) for a, b in zip(edges, edges[1:])]


def _rejection(spec, seed, index, lo, hi, rho_min):
    """First accepted proposal in each sample's own stream."""
    d = spec.dim
    density = lambda x: spec.density(x, 0.0)
    peak = find_density_max(density, lo, hi)
    envelope = ENVELOPE_MARGIN * peak
    out = np.full((index.size, d), np.nan)
    pending = np.arange(index.size)
    attempt = np.zeros(index.size, dtype=np.int64)
    proposed = accepted = 0
    batch = 64
    while pending.size:
        # Each sample evaluates its next ``batch`` attempts in counter order.
        k = np.arange(batch)
        att = attempt[pending][:, None] + k
        base = att * (d + 1)
        u = np.stack([uniforms(seed, index[pending][:, None], base + j) for j in range(d + 1)], -1)
        x = lo + (hi - lo) * u[..., :d]
        rho = density(x.reshape(-1, d)).reshape(att.shape)
        if np.any(rho > envelope):
            raise EnvelopeError("density exceeds the rejection envelope")
        hit = (u[..., d] * envelope < rho) & (rho >= rho_min)
        first = np.argmax(hit, axis=1)
        found = hit[np.arange(pending.size), first]
        out[pending[found]] = x[found, first[found]]
        proposed += int(np.where(found, first + 1, batch).sum())
        accepted += int(found.sum())
        if proposed >= 10000 and accepted / proposed < MIN_ACCEPTANCE:
            raise EnvelopeError(f"acceptance rate {accepted / proposed:.2e} below {MIN_ACCEPTANCE:g}")
        attempt[pending] += batch
        pending = pending[~found]
        rate = max(accepted / max(proposed, 1), MIN_ACCEPTANCE)
        batch = int(min(max(64, 2.0 / rate), max(64, 2_000_000 // max(pending.size, 1))))
    return out


def find_density_max(density, lo, hi, points_per_axis=None):
    """Maximum of ``density`` over the box: grid scan, then Nelder-Mead."""
    d = lo.size
    if points_per_axis is None:
        points_per_axis = 2001 if d == 1 else 61
    axes = [np.linspace(lo[k], hi[k], points_per_axis) for k in range(d)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    vals = density(grid)
    best = float(vals.max())
    for start in grid[np.argsort(vals)[-8:]]:
        res = optimize.minimize(lambda p: -float(density(np.clip(p, lo, hi)[None])[0]),
                                start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14 * max(best, 1e-300)})
        best = max(best, -float(res.fun))
    return best


def _inverse_cdf(spec, seed, index, lo, hi, rho_min):
    density = lambda x: spec.density(x[..., None], 0.0)
    cdf = TabulatedCDF(density, lo[0], hi[0])
    out = np.empty(index.size)
    todo = np.arange(index.size)
    counter = 0
    while todo.size:
        x = cdf.inverse(uniforms(seed, index[todo], counter))
        out[todo] = x
        todo = todo[density(x) < rho_min]
        counter += 1
        if counter > 1000:
            raise SamplingError("could not draw points with non-negligible density")
    return out[:, None]


def sample_initial(spec, cfg):
    """Draw ``cfg.n`` positions from rho(., 0); returns an (n, d) array.

    Samples are never placed where rho < 1e-15 rho_ref; such draws are
    repeated from the sample's next counter.
    """
    method = SamplingMethod(cfg.method or ("inverse_cdf_1d" if spec.dim == 1 else "rejection_nd"))
    if method is SamplingMethod.INVERSE_CDF_1D and spec.dim != 1:
        raise ValueError("inverse-CDF sampling is one-dimensional")
    lo, hi = _resolve_support(spec, cfg)
    check_support(spec, lo, hi)
    rho_min = ZERO_DENSITY_FACTOR * spec.reference_density()
    cells = _cells(spec, cfg, lo, hi)
    if len(cells) == 1:
        counts = np.array([cfg.n])
    else:
        masses = [state_mass(spec, a, b) for a, b in cells]
        counts = allocate(cfg.n, masses)
    draw = _inverse_cdf if method is SamplingMethod.INVERSE_CDF_1D else _rejection
    parts = []
    start = 0
    for (a, b), count in zip(cells, counts):
        if count:
            index = np.arange(start, start + count, dtype=np.uint64)
            parts.append(draw(spec, int(cfg.seed), index, a, b, rho_min))
        start += count
    return np.concatenate(parts, axis=0)


def analytic_cdf(spec, support=None):
    """Tabulated CDF of rho(., 0) for a 1D state."""
    if spec.dim != 1:
        raise ValueError("the CDF is tabulated for 1D states only")
    lo, hi = default_support(spec) if support is None else support
    return TabulatedCDF(lambda x: spec.density(x[..., None], 0.0), float(np.ravel(lo)[0]),
                        float(np.ravel(hi)[0]))


def ks_statistic(samples, spec, cdf=None):
    """Kolmogorov-Smirnov distance between the samples and rho(., 0)."""
    cdf = cdf or analytic_cdf(spec)
    return float(stats.kstest(np.ravel(samples), cdf).statistic)


def ks_critical(n, alpha=0.01):
    """Asymptotic two-sided KS critical value, c(alpha) / sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)
