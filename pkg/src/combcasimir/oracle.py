"""Independent brute-force verifiers.

Nothing here calls the scattering, spectrum, vacuum or thermal code paths:
the ODE oracle integrates the Schrodinger equation directly, the secular
functions are written in their own closed forms, roots come from a dense
sign-change scan, and the thermal band sum evaluates the Boltzmann kernel by
direct quadrature over frequencies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import GridTooCoarseError
from .numerics import gauss_legendre
from .scattering import CombModel, DeltaDeltaPrime, PoschlTeller, ScatteringAmplitudes

__all__ = [
    "OdeScatterSetup",
    "TruncationWarning",
    "transfer_matrix_amplitudes",
    "secular_h",
    "dense_scan_roots",
    "band_sum_free_energy",
    "kernel_by_quadrature",
    "oracle_negative_band",
]


class TruncationWarning(UserWarning):
    """A truncated sum may have dropped a non-negligible tail."""


@dataclass(frozen=True)
class OdeScatterSetup:
    """Fixed-step RK4 integration across the support ``[-eps/2, eps/2]``."""

    eps: float
    grid_step: float

    def __post_init__(self):
        if not 0 < self.grid_step <= self.eps / 200:
            raise ValueError(f"grid_step must lie in (0, eps/200], got {self.grid_step}")

    @classmethod
    def default(cls, eps: float, k: float) -> "OdeScatterSetup":
        return cls(eps, min(eps / 200, 0.01 / max(1.0, abs(k))))


def _pt_potential(z):
    return -2.0 / np.cosh(z) ** 2


def _rk4(k: float, setup: OdeScatterSetup):
    """Integrate ``psi'' = (V - k^2) psi`` from ``eps/2`` down to ``-eps/2``."""
    z_right = setup.eps / 2
    n = max(1, math.ceil(setup.eps / setup.grid_step))
    h = -setup.eps / n
    y = np.array([np.exp(1j * k * z_right), 1j * k * np.exp(1j * k * z_right)])

    def rhs(z, y):
        return np.array([y[1], (_pt_potential(z) - k * k) * y[0]])

    z = z_right
    for _ in range(n):
        k1 = rhs(z, y)
        k2 = rhs(z + h / 2, y + h / 2 * k1)
        k3 = rhs(z + h / 2, y + h / 2 * k2)
        k4 = rhs(z + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        z += h
    return y


def transfer_matrix_amplitudes(eps: float, k: float,
                               setup: OdeScatterSetup | None = None) -> ScatteringAmplitudes:
    """Scattering amplitudes of the truncated Poschl-Teller well from the ODE.

    The solution equal to ``e^{ikz}`` right of the support is integrated to the
    left edge and matched to ``A e^{ikz} + B e^{-ikz}``; then ``t = 1/A`` and
    ``r = B/A``.

    Raises
    ------
    GridTooCoarseError
        If flux conservation ``|t|^2 + |r|^2 = 1`` fails by more than 1e-8.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    setup = setup or OdeScatterSetup.default(eps, k)
    psi, dpsi = _rk4(k, setup)
    z_left = -eps / 2
    amp_a = (psi + dpsi / (1j * k)) / 2 * np.exp(-1j * k * z_left)
    amp_b = (psi - dpsi / (1j * k)) / 2 * np.exp(1j * k * z_left)
    t, r = 1 / amp_a, amp_b / amp_a
    drift = abs(abs(t) ** 2 + abs(r) ** 2 - 1)
    if drift > 1e-8:
        raise GridTooCoarseError(f"flux conservation drifts by {drift:.2e}; reduce grid_step",
                                 eps=eps, k=k, grid_step=setup.grid_step)
    return ScatteringAmplitudes(t=t, r_R=r, r_L=r, k=k)


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def secular_h(model: CombModel, k):
    """Bloch discriminant from the closed secular forms, regular at ``k = 0``.

    Delta-delta': ``-(cos ka + (gamma/2) sin(ka)/k)/Omega``. Poschl-Teller:
    ``(Sigma cos ka - Upsilon sin ka)/(k^2 (k^2+1)(1 + cosh eps))`` with the
    factors of ``k`` cancelled analytically.
    """
    k = np.asarray(k, dtype=complex)
    a = model.a
    pot = model.potential
    if isinstance(pot, DeltaDeltaPrime):
        w0, w1 = pot.w0, pot.w1
        gamma = w0 / (1 + w1 * w1)
        omega = (w1 * w1 - 1) / (w1 * w1 + 1)
        if omega == 0:
            raise ValueError("opaque node: the secular function has no Bloch form")
        return -(np.cos(k * a) + gamma * a / 2 * _sinc(k * a)) / omega
    if isinstance(pot, PoschlTeller):
        eps = pot.eps
        tau = math.tanh(eps / 2)
        lam = 1 - tau * tau
        ch = math.cosh(eps)
        k2 = k * k
        sigma_k2 = (3 + k2) + (k2 - 1) * ch + lam * eps ** 2 * _sinc(k * eps) ** 2
        upsilon_k = 2 * tau * (1 + k2 + k2 * ch) + lam * eps * np.cos(k * eps) * _sinc(k * eps)
        num = sigma_k2 * np.cos(k * a) - upsilon_k * a * _sinc(k * a)
        return num / ((k2 + 1) * (1 + ch))
    raise TypeError(f"unsupported potential {pot!r}")


def dense_scan_roots(f, interval, step: float, tol: float = 1e-13) -> np.ndarray:
    """All sign changes of a vectorised real ``f`` on a uniform grid, refined by Brent.

    Roots closer together than ``step`` can be missed; completeness is only as
    good as the grid.
    """
    lo, hi = interval
    n = max(2, math.ceil((hi - lo) / step) + 1)
    x = np.linspace(lo, hi, n)
    y = np.asarray(f(x), dtype=float)
    roots = list(x[y == 0])
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    scalar = lambda v: float(np.asarray(f(np.array([v])))[0])  # noqa: E731
    for i in idx:
        roots.append(brentq(scalar, x[i], x[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps))
    return np.array(sorted(roots))


def kernel_by_quadrature(omega_min: float, T: float) -> float:
    """``(T/2pi) int_{omega_min}^inf omega log(1 - e^{-omega/T}) d omega``.

    The Boltzmann kernel evaluated as the frequency integral it abbreviates.
    With ``omega = omega_min + T x`` the factor ``e^{-omega_min/T}`` is pulled
    out so the integrand stays of order one.
    """
    y0 = omega_min / T

    def f(x):
        z = math.exp(-(y0 + x))
        if z == 0:
            return -(omega_min + T * x) * math.exp(-x)
        ratio = math.log1p(-z) / z if z < 1 else -math.inf
        return (omega_min + T * x) * ratio * math.exp(-x)

    head, _ = quad(f, 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)
    tail, _ = quad(f, 1.0, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    return T * T / (2 * math.pi) * math.exp(-y0) * (head + tail)


@dataclass(frozen=True)
class OracleNegativeBand:
    theta_c: float
    kappa_min: float


def oracle_negative_band(model: CombModel, step: float = 1e-3) -> OracleNegativeBand | None:
    """Negative band from a dense scan of the closed-form ``h(i kappa)``."""
    grid_hi = 5.0
    g = lambda x: np.real(secular_h(model, 1j * x)) - 1  # noqa: E731
    roots = dense_scan_roots(g, (step * 0.5, grid_hi), step)
    h0 = float(np.real(secular_h(model, 0.0)))
    if len(roots) == 0:
        return None
    kappa_min = float(roots[-1])
    theta_c = math.acos(h0) if abs(h0) <= 1 else math.pi
    return OracleNegativeBand(theta_c, kappa_min)


def _root_step(model: CombModel) -> float:
    return 2e-4 * min(1.0, model.a)


def band_sum_free_energy(model: CombModel, T: float, n_bands: int | None = None,
                         theta_nodes: int = 64, abs_tol: float = 1e-12) -> float:
    """Thermal free energy per unit area as an explicit sum over band roots.

    For every Gauss-Legendre Bloch phase the real roots of ``cos(theta) - h``
    are found by a dense scan and the Boltzmann kernel is summed over them;
    the negative band adds ``I3(sqrt(m^2 - kappa^2))``. With ``n_bands=None``
    the momentum range is chosen so the dropped tail is below ``abs_tol``.
    """
    band = oracle_negative_band(model)
    m = 0.0 if band is None else band.kappa_min

    def kernel(omega):
        return kernel_by_quadrature(float(omega), T)

    if n_bands is None:
        # Kernel decays like omega e^{-omega/T}; keep terms down to abs_tol.
        k_max = T * (40 + math.log(max(T, 1.0))) + 2 * math.pi / model.a
    else:
        k_max = (n_bands + 0.5) * math.pi / model.a

    h0 = float(np.real(secular_h(model, 0.0)))
    split = band.theta_c if band is not None else (math.acos(h0) if abs(h0) < 1 else None)
    if split is None or split <= 0 or split >= math.pi:
        nodes, weights = gauss_legendre(0.0, math.pi, theta_nodes)
    else:
        x1, w1 = gauss_legendre(0.0, split, theta_nodes)
        x2, w2 = gauss_legendre(split, math.pi, theta_nodes)
        nodes, weights = np.concatenate([x1, x2]), np.concatenate([w1, w2])

    step = _root_step(model)
    total = 0.0
    tail = 0.0
    for th, w in zip(nodes, weights):
        c = math.cos(th)
        roots = dense_scan_roots(lambda x: c - np.real(secular_h(model, x)),
                                 (step / 3, k_max), step)
        if n_bands is not None:
            roots = roots[:n_bands]
        terms = [kernel(math.sqrt(m * m + k * k)) for k in roots]
        total += w * sum(terms) / math.pi
        if terms:
            tail = max(tail, abs(terms[-1]))

    if band is not None:
        bx, bw = gauss_legendre(0.0, band.theta_c, theta_nodes)
        for th, w in zip(bx, bw):
            c = math.cos(th)
            g = lambda x: np.real(secular_h(model, 1j * x)) - c  # noqa: E731
            kappa = dense_scan_roots(g, (1e-4, band.kappa_min * (1 - 1e-9)), 1e-3)
            kappa = float(kappa[-1]) if len(kappa) else band.kappa_min
            total += w * kernel(math.sqrt(max(m * m - kappa * kappa, 0.0))) / math.pi

    if tail > abs_tol:
        warnings.warn(f"band sum truncated at k = {k_max:.3g}; last term {tail:.2e} "
                      f"exceeds {abs_tol:.1e}", TruncationWarning, stacklevel=2)
    return total
