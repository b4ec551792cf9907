"""Scattering data of the single node potentials and the phase shift.

Two node potentials are supported:

* :class:`DeltaDeltaPrime` -- ``w0 delta(z) + 2 w1 delta'(z)``;
* :class:`PoschlTeller` -- ``-2 / cosh(z)^2`` truncated to ``|z| <= eps/2``.

Every potential exposes the same small set of analytic building blocks,
``transmission``, ``reflection``, ``det_s`` and ``bloch_terms``, each accepting
complex momenta (scalars or arrays). The Bloch terms are written so that the
upper half of the momentum plane can be evaluated without overflow, which is
where the contour integrals of :mod:`vacuum` and :mod:`thermal` live.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import GridTooCoarseError, PoleProximityError, TransparencyError

__all__ = [
    "DeltaDeltaPrime",
    "PoschlTeller",
    "CombModel",
    "DerivedCouplings",
    "ScatteringAmplitudes",
    "derived_couplings",
    "amplitudes",
    "det_s",
    "phase_shift",
    "phase_shift_derivative",
]


def _exprel(x):
    """(e^x - 1)/x, accurate near x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, x)
    series = 1 + x / 2 + x ** 2 / 6 + x ** 3 / 24 + x ** 4 / 120
    return np.where(small, series, np.expm1(safe) / safe)


def _exprel_prime(x):
    """d/dx of (e^x - 1)/x, i.e. (x e^x - e^x + 1)/x^2."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 0.1
    safe = np.where(small, 1.0, x)
    # sum_j x^j (j+1)/(j+2)!
    series = np.zeros_like(x)
    term_fact = 2.0
    for j in range(14):
        series = series + x ** j * (j + 1) / term_fact
        term_fact *= j + 3
    return np.where(small, series, (safe * np.exp(safe) - np.expm1(safe)) / safe ** 2)


@dataclass(frozen=True)
class DeltaDeltaPrime:
    """Point interaction ``w0 delta(z) + 2 w1 delta'(z)``."""

    w0: float
    w1: float

    @property
    def opaque(self) -> bool:
        """``|w1| = 1``: Omega vanishes, t is identically zero and the cells decouple."""
        return abs(self.omega) < 1e-14

    @property
    def gamma(self) -> float:
        return self.w0 / (1 + self.w1 ** 2)

    @property
    def omega(self) -> float:
        return (self.w1 ** 2 - 1) / (self.w1 ** 2 + 1)

    support = 0.0

    def _den(self, k):
        den = 1j * self.gamma + 2 * k
        if self.gamma != 0 and np.any(np.abs(den) < 1e-12 * max(1.0, abs(self.gamma))):
            raise PoleProximityError("momentum too close to the pole k = -i gamma/2",
                                     gamma=self.gamma)
        return den

    def transmission(self, k):
        k = np.asarray(k, dtype=complex)
        if self.gamma == 0:
            return np.full_like(k, -self.omega), np.zeros_like(k)
        den = self._den(k)
        t = -2 * k * self.omega / den
        dt = -2j * self.gamma * self.omega / den ** 2
        return t, dt

    def log_derivative_t(self, k):
        k = np.asarray(k, dtype=complex)
        if self.opaque:
            raise TransparencyError(
                "|w1| = 1 gives Omega = 0 and t identically zero; log t is undefined",
                w1=self.w1)
        if self.gamma == 0:
            return np.zeros_like(k)
        return 1j * self.gamma / (k * self._den(k))

    def reflection(self, k):
        k = np.asarray(k, dtype=complex)
        root = np.sqrt(1 - self.omega ** 2)
        if self.gamma == 0:
            return np.full_like(k, -root), np.full_like(k, root)
        den = self._den(k)
        r_right = (-1j * self.gamma - 2 * k * root) / den
        r_left = (-1j * self.gamma + 2 * k * root) / den
        return r_right, r_left

    def det_s(self, k):
        k = np.asarray(k, dtype=complex)
        if self.gamma == 0:
            return np.ones_like(k), np.zeros_like(k)
        den = self._den(k)
        return (2 * k - 1j * self.gamma) / den, 4j * self.gamma / den ** 2

    def bloch_terms(self, k, a: float):
        """``(t, t'/t, q, q')`` with ``q = det S * exp(2ika)``.

        For an opaque node ``t'/t`` is returned as NaN.
        """
        k = np.asarray(k, dtype=complex)
        t, _ = self.transmission(k)
        dlog_t = np.full_like(k, np.nan) if self.opaque else self.log_derivative_t(k)
        d, dd = self.det_s(k)
        v2 = np.exp(2j * a * k)
        return t, dlog_t, d * v2, (dd + 2j * a * d) * v2


@dataclass(frozen=True)
class PoschlTeller:
    """Poschl-Teller well ``-2/cosh^2 z`` restricted to ``|z| <= eps/2``.

    Internally the denominator ``Delta(k)`` of the transmission amplitude is
    factorised as ``k * D1(k) * D2(k)`` so that the simple zero at ``k = 0``
    cancels analytically against the numerator.
    """

    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"compact support eps must be positive, got {self.eps}")

    @property
    def support(self) -> float:
        return self.eps

    @property
    def tau(self) -> float:
        return float(np.tanh(self.eps / 2))

    @property
    def lam(self) -> float:
        return 1.0 - self.tau ** 2

    def _core(self, k):
        eps, tau, lam = self.eps, self.tau, self.lam
        u = np.exp(1j * eps * k)
        b_minus = lam + 2 * k * (k - 1j * tau)
        d1 = 2 * (k - 1j * tau) - lam * 1j * eps * _exprel(1j * eps * k)
        d2 = b_minus + u * lam
        g = d1 * d2
        if np.any(np.abs(g) < 1e-12):
            raise PoleProximityError("momentum too close to a pole of the PT amplitudes",
                                     eps=eps)
        dd1 = 2 + lam * eps ** 2 * _exprel_prime(1j * eps * k)
        dd2 = 4 * k - 2j * tau + 1j * eps * u * lam
        return u, g, dd1 / d1 + dd2 / d2

    def _rho(self, k, u):
        """(u^2 B+ - B-)/k and its derivative, with B± = lam + 2k(k ± i tau)."""
        eps, tau, lam = self.eps, self.tau, self.lam
        u2 = u * u
        x = 2j * eps * k
        e2 = 2j * eps * _exprel(x)
        rho = lam * e2 + 2 * (k * (u2 - 1) + 1j * tau * (u2 + 1))
        drho = (lam * (2j * eps) ** 2 * _exprel_prime(x)
                + 2 * ((u2 - 1) + 2j * eps * k * u2 + 1j * tau * 2j * eps * u2))
        return rho, drho

    def transmission(self, k):
        k = np.asarray(k, dtype=complex)
        _, g, dlog_g = self._core(k)
        t = 4 * k * (k * k + 1) / g
        dt = t * self._dlog_t(k, dlog_g)
        return t, dt

    @staticmethod
    def _dlog_t(k, dlog_g):
        return 1 / k + 2 * k / (k * k + 1) - dlog_g

    def log_derivative_t(self, k):
        k = np.asarray(k, dtype=complex)
        _, _, dlog_g = self._core(k)
        return self._dlog_t(k, dlog_g)

    def reflection(self, k):
        k = np.asarray(k, dtype=complex)
        u, g, _ = self._core(k)
        rho, _ = self._rho(k, u)
        r = self.lam * rho / (u * g)
        return r, r

    def _numerators(self, k, u):
        lam = self.lam
        n1 = 16 * k ** 2 * (k * k + 1) ** 2
        dn1 = 32 * k * (k * k + 1) * (3 * k * k + 1)
        rho, drho = self._rho(k, u)
        m = lam ** 2 * rho ** 2
        dm = 2 * lam ** 2 * rho * drho
        return n1, dn1, m, dm

    def det_s(self, k):
        k = np.asarray(k, dtype=complex)
        u, g, dlog_g = self._core(k)
        n1, dn1, m, dm = self._numerators(k, u)
        inv_u2 = 1 / (u * u)
        d = (n1 - m * inv_u2) / g ** 2
        dd = (dn1 - dm * inv_u2 + 2j * self.eps * m * inv_u2) / g ** 2 - 2 * d * dlog_g
        return d, dd

    def bloch_terms(self, k, a: float):
        """``(t, t'/t, q, q')`` with ``q = det S * exp(2ika)``.

        The growing factor ``exp(-2i eps k)`` carried by ``r^2`` is absorbed into
        ``exp(2i(a - eps)k)``, which is bounded in the upper half plane.
        """
        k = np.asarray(k, dtype=complex)
        u, g, dlog_g = self._core(k)
        t = 4 * k * (k * k + 1) / g
        dlog_t = self._dlog_t(k, dlog_g)
        n1, dn1, m, dm = self._numerators(k, u)
        v2 = np.exp(2j * a * k)
        w2 = np.exp(2j * (a - self.eps) * k)
        g2 = g ** 2
        q = (n1 * v2 - m * w2) / g2
        dq = ((dn1 + 2j * a * n1) * v2 - (dm + 2j * (a - self.eps) * m) * w2) / g2 \
            - 2 * q * dlog_g
        return t, dlog_t, q, dq


Potential = Union[DeltaDeltaPrime, PoschlTeller]


@dataclass(frozen=True)
class CombModel:
    """Lattice spacing ``a`` plus the node potential repeated at ``z = n a``."""

    a: float
    potential: Potential

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.a}")
        if self.potential.support > self.a:
            raise ValueError(f"node support {self.potential.support} exceeds the lattice "
                             f"spacing {self.a}; the potential must fit inside the unit cell")

    @classmethod
    def dirac(cls, w0: float, w1: float, a: float) -> "CombModel":
        return cls(a, DeltaDeltaPrime(w0, w1))

    @classmethod
    def poschl_teller(cls, eps: float, a: float) -> "CombModel":
        return cls(a, PoschlTeller(eps))

    @classmethod
    def free(cls, a: float) -> "CombModel":
        return cls(a, DeltaDeltaPrime(0.0, 0.0))

    def with_spacing(self, a: float) -> "CombModel":
        return CombModel(a, self.potential)

    @property
    def is_free(self) -> bool:
        p = self.potential
        return isinstance(p, DeltaDeltaPrime) and p.w0 == 0 and p.w1 == 0

    def describe(self) -> dict:
        p = self.potential
        if isinstance(p, DeltaDeltaPrime):
            return {"model": "ddp", "a": self.a, "w0": p.w0, "w1": p.w1}
        return {"model": "pt", "a": self.a, "eps": p.eps}


@dataclass(frozen=True)
class DerivedCouplings:
    gamma: float | None = None
    omega: float | None = None
    lambda_pt: float | None = None


def derived_couplings(model: CombModel) -> DerivedCouplings:
    p = model.potential
    if isinstance(p, DeltaDeltaPrime):
        return DerivedCouplings(gamma=p.gamma, omega=p.omega)
    return DerivedCouplings(lambda_pt=p.lam)


@dataclass(frozen=True)
class ScatteringAmplitudes:
    t: complex
    r_R: complex
    r_L: complex
    k: complex


def amplitudes(model: CombModel, k) -> ScatteringAmplitudes:
    """Transmission and reflection amplitudes of the node potential at ``k``."""
    if np.any(np.asarray(k) == 0):
        raise PoleProximityError("scattering data are not defined at k = 0")
    t, _ = model.potential.transmission(k)
    r_right, r_left = model.potential.reflection(k)
    return ScatteringAmplitudes(t[()], r_right[()], r_left[()], k)


def det_s(model: CombModel, k):
    """Determinant ``t^2 - r_R r_L`` of the on-shell scattering matrix."""
    if np.any(np.asarray(k) == 0):
        raise PoleProximityError("scattering data are not defined at k = 0")
    return model.potential.det_s(k)[0][()]


def phase_shift(model: CombModel, k_grid) -> np.ndarray:
    """Continuous phase shift ``delta(k) = arg(det S)/2`` on an ascending grid.

    The branch is fixed by continuing the grid geometrically to large momenta,
    where ``delta -> 0``.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or np.any(k_grid <= 0) or np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be strictly positive and ascending")
    k_end = k_grid[-1]
    tail = np.geomspace(k_end, max(1e4, 100 * k_end), 400)[1:]
    full = np.concatenate([k_grid, tail])
    d, _ = model.potential.det_s(full)
    phase = np.unwrap(np.angle(d)) / 2
    jumps = np.abs(np.diff(phase[: len(k_grid)]))
    if jumps.size and jumps.max() > np.pi / 4:
        i = int(np.argmax(jumps))
        raise GridTooCoarseError(
            f"phase shift changes by {jumps[i]:.3f} between k={k_grid[i]:.6g} and "
            f"k={k_grid[i + 1]:.6g}; refine the grid", k=k_grid[i])
    phase -= np.pi * np.round(phase[-1] / np.pi)
    return phase[: len(k_grid)]


def phase_shift_derivative(model: CombModel, k):
    """``d delta / dk = (1/2i) d log det S / dk`` from the closed forms."""
    d, dd = model.potential.det_s(k)
    return (dd / (2j * d))[()]
