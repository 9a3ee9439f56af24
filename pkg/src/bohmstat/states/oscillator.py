"""Superpositions of harmonic-oscillator eigenstates in one and three dimensions."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .base import BornMoments, PhysicalConstants, State
from .hermite import hermite_polynomial_parts

_NORM_TOL = 1e-12


def _normalize(coefficients):
    c = np.asarray(coefficients, dtype=complex)
    norm = math.sqrt(float(np.sum(np.abs(c) ** 2)))
    if norm == 0.0:
        raise ValueError("coefficients must not all vanish")
    if abs(norm - 1.0) > _NORM_TOL:
        warnings.warn(f"coefficients renormalized (norm was {norm:.6g})", stacklevel=3)
        c = c / norm
    return c


def _position_matrix(m, n):
    """<m|u|n> for the dimensionless oscillator coordinate u = alpha x."""
    if m == n + 1:
        return math.sqrt((n + 1) / 2.0)
    if m == n - 1:
        return math.sqrt(n / 2.0)
    return 0.0


def _position_sq_matrix(m, n):
    """<m|u^2|n>."""
    if m == n:
        return n + 0.5
    if m == n + 2:
        return 0.5 * math.sqrt((n + 1) * (n + 2))
    if m == n - 2:
        return 0.5 * math.sqrt(n * (n - 1))
    return 0.0


def _axis(values, a):
    # Constant orders are plain floats with no axis to index.
    return values if isinstance(values, float) else values[a]


@dataclass(frozen=True)
class HOSuperposition(State):
    """Finite superposition of oscillator eigenstates, each with its own phase.

    psi(x, t) = sum_j c_j phi_{n_j}(x) exp(-i E_j t / hbar) with
    E_j = hbar omega (|n_j| + d/2). ``quantum_numbers`` may hold plain
    integers (1D) or d-tuples.
    """

    quantum_numbers: tuple
    coefficients: tuple
    constants: PhysicalConstants = PhysicalConstants()
    _c: np.ndarray = field(init=False, repr=False, compare=False)
    _n: np.ndarray = field(init=False, repr=False, compare=False)
    _e: np.ndarray = field(init=False, repr=False, compare=False)
    _rel: np.ndarray = field(init=False, repr=False, compare=False)

    kind = "HO_SUPERPOSITION"

    def __post_init__(self):
        qn = tuple(tuple(int(k) for k in (q if np.ndim(q) else (q,))) for q in self.quantum_numbers)
        if not qn:
            raise ValueError("at least one eigenstate is required")
        if len({len(q) for q in qn}) != 1:
            raise ValueError("all quantum-number tuples must have the same dimension")
        if len(qn) != len(self.coefficients):
            raise ValueError("one coefficient per eigenstate is required")
        if min(min(q) for q in qn) < 0:
            raise ValueError("quantum numbers must be non-negative")
        if self.constants.omega <= 0:
            raise ValueError("oscillator states need omega > 0")
        object.__setattr__(self, "quantum_numbers", qn)
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))
        object.__setattr__(self, "_c", _normalize(self.coefficients))
        object.__setattr__(self, "_n", np.array(qn, dtype=int))
        self._check_dimension()
        k = self.constants
        e = k.hbar * k.omega * (self._n.sum(axis=1) + 0.5 * self.dim)
        object.__setattr__(self, "_e", e)
        object.__setattr__(self, "_rel", (e - e.min()) / k.hbar)

    def _check_dimension(self):
        if self.dim != 1:
            raise ValueError("HO_SUPERPOSITION is one-dimensional")
        if self._n.shape[1] != 1:
            raise ValueError("HO_SUPERPOSITION expects scalar quantum numbers")

    @property
    def energies(self):
        return self._e.copy()

    def _sums(self, u, t, derivatives, term_scale=None):
        """S = sum_j w_j prod_a p_{n_ja}(u_a) and D_a = dS/du_a, as real pairs.

        ``u`` has the axis first, shape (d, ...). w_j is the coefficient times
        the phase relative to the lowest energy, constant for degenerate
        terms.
        """
        terms = self.quantum_numbers
        p, dp = hermite_polynomial_parts(max(max(n) for n in terms), u)
        if self._rel.any():
            w = self._c * np.exp(-1j * np.multiply.outer(t, self._rel))
        else:
            w = self._c
        if term_scale is not None:
            w = w * term_scale
        wr, wi = w.real, w.imag
        batch = u.shape[1:]
        s_re = np.zeros(batch)
        s_im = np.zeros(batch)
        d_re = np.zeros(u.shape) if derivatives else None
        d_im = np.zeros(u.shape) if derivatives else None
        for j, n in enumerate(terms):
            factors = [_axis(p[m], a) for a, m in enumerate(n)]
            prod = factors[0]
            for f in factors[1:]:
                prod = prod * f
            s_re += wr[..., j] * prod
            s_im += wi[..., j] * prod
            if derivatives:
                for a, m in enumerate(n):
                    if m == 0:
                        continue
                    part = _axis(dp[m], a)
                    for b, f in enumerate(factors):
                        if b != a:
                            part = part * f
                    d_re[a] += wr[..., j] * part
                    d_im[a] += wi[..., j] * part
        return (s_re, s_im), (d_re, d_im)

    def _frame(self, x, t):
        """Scaled coordinates (axis first), common Gaussian and global phase angle."""
        alpha = self.constants.alpha
        u = np.multiply(alpha, np.moveaxis(x, -1, 0), order="C")
        g = alpha ** (0.5 * self.dim) * np.exp(-0.5 * np.sum(u * u, axis=0))
        angle = t * (-self._e.min() / self.constants.hbar)
        return u, alpha, g, angle

    @staticmethod
    def _assemble(scale, angle, re, im):
        c, s = np.cos(angle), np.sin(angle)
        out = np.empty(np.shape(re), dtype=complex)
        out.real = scale * (c * re - s * im)
        out.imag = scale * (c * im + s * re)
        return out

    def _amplitudes(self, x, t):
        u, alpha, g, angle = self._frame(x, t)
        (s_re, s_im), (d_re, d_im) = self._sums(u, t, True)
        psi = self._assemble(g, angle, s_re, s_im)
        grad = self._assemble(alpha * g, angle, d_re - u * s_re, d_im - u * s_im)
        return psi, np.moveaxis(grad, 0, -1)

    def _psi(self, x, t):
        u, _, g, angle = self._frame(x, t)
        (s_re, s_im), _ = self._sums(u, t, False)
        return self._assemble(g, angle, s_re, s_im)

    def _laplacian(self, x, t):
        # lap phi_n = alpha^2 (|u|^2 - 2|n| - d) phi_n term by term
        level = 2 * self._n.sum(axis=1) + self.dim
        u, alpha, g, angle = self._frame(x, t)
        (s_re, s_im), _ = self._sums(u, t, False)
        (l_re, l_im), _ = self._sums(u, t, False, term_scale=level)
        u2 = np.sum(u * u, axis=0)
        return alpha ** 2 * self._assemble(g, angle, u2 * s_re - l_re, u2 * s_im - l_im)

    def _spinless_velocity(self, x, t):
        """(v, rho) without forming psi.

        With psi = g e^{i theta(t)} S(u), the Gaussian and the global phase
        cancel in Im(grad psi / psi), leaving v = (hbar alpha / M) Im(conj(S) D) / |S|^2.
        """
        k = self.constants
        u, alpha, g, _ = self._frame(x, t)
        (s_re, s_im), (d_re, d_im) = self._sums(u, t, True)
        mod2 = s_re * s_re + s_im * s_im
        with np.errstate(divide="ignore", invalid="ignore"):
            v = (k.hbar * alpha / k.mass) * (s_re * d_im - s_im * d_re) / mod2
        return np.moveaxis(v, 0, -1), g * g * mod2

    def born_moments(self, t):
        """Exact moments from oscillator position matrix elements."""
        k = self.constants
        alpha = k.alpha
        e = self.energies
        mean = np.zeros(self.dim)
        second = np.zeros(self.dim)
        for a in range(self.dim):
            m1 = 0.0
            m2 = 0.0
            for i, ni in enumerate(self._n):
                for j, nj in enumerate(self._n):
                    others_equal = all(ni[b] == nj[b] for b in range(self.dim) if b != a)
                    if not others_equal:
                        continue
                    w = np.conj(self._c[i]) * self._c[j] * np.exp(1j * (e[i] - e[j]) * t / k.hbar)
                    m1 += w * _position_matrix(ni[a], nj[a])
                    m2 += w * _position_sq_matrix(ni[a], nj[a])
            mean[a] = m1.real / alpha
            second[a] = m2.real / alpha ** 2
        var = np.maximum(second - mean ** 2, 0.0)
        return BornMoments(mean=mean, variance=var, t=float(t))

    def quadrature_frame(self, t):
        alpha = self.constants.alpha
        # exp(-u^2) matches the Gaussian envelope of |phi_n|^2 in u = alpha x
        return np.zeros(self.dim), np.full(self.dim, 1.0 / alpha)


@dataclass(frozen=True)
class HO3DDegenerate(HOSuperposition):
    """Superposition of degenerate 3D oscillator eigenstates.

    All terms share one energy, so time evolution is a global phase and the
    density and guidance field are stationary.
    """

    kind = "HO_3D_DEGENERATE"
    dim = 3

    def _check_dimension(self):
        if self._n.shape[1] != 3:
            raise ValueError("HO_3D_DEGENERATE expects (n_x, n_y, n_z) triples")
        totals = set(self._n.sum(axis=1).tolist())
        if len(totals) != 1:
            raise ValueError(f"terms are not degenerate: total quanta {sorted(totals)}")


def nodal_superposition_3d(constants=PhysicalConstants()):
    """(phi_111 + e^{i pi/3} phi_300 + e^{i pi/7} phi_120) / sqrt(3).

    Every term is odd in x, so the plane x = 0 is a node. All terms carry
    E = 9 hbar omega / 2.
    """
    s = 1.0 / math.sqrt(3.0)
    return HO3DDegenerate(
        quantum_numbers=((1, 1, 1), (3, 0, 0), (1, 2, 0)),
        coefficients=(s, s * np.exp(1j * math.pi / 3), s * np.exp(1j * math.pi / 7)),
        constants=constants,
    )


def equal_superposition(nmax, constants=PhysicalConstants()):
    """Equal-weight superposition of the lowest ``nmax + 1`` 1D eigenstates."""
    c = 1.0 / math.sqrt(nmax + 1)
    return HOSuperposition(tuple(range(nmax + 1)), (c,) * (nmax + 1), constants)
