"""Bloch secular function, band structure, negative band and unitarity mass.

The Bloch discriminant is written as ``h_V = A/B`` with ``A = 1 + det S e^{2ika}``
and ``B = 2 t e^{ika}``. Both vanish at ``k = 0`` (and, for the Poschl-Teller
node, at ``k = +-i``) although ``h_V`` itself is entire there. Close to those
points ``h_V`` is evaluated from its Taylor series, whose coefficients are
obtained once per model by sampling ``A/B`` on a circle of moderate radius.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import RootBracketingError, TransparencyError, UnsupportedSpectrumError
from .numerics import RootBracket, find_root, gauss_legendre
from .scattering import CombModel, PoschlTeller

__all__ = [
    "ScanResolutionWarning",
    "SecularEvaluation",
    "NegativeBand",
    "Band",
    "BandStructure",
    "h_v",
    "h_v_derivative",
    "secular",
    "band_edges",
    "dispersion",
    "negative_band",
    "mass",
    "band_structure",
    "bloch_averaged_log_derivative",
    "bloch_averaged_interaction",
    "log_derivative_f",
    "interaction_log_derivative",
]

KAPPA_CAP = 5.0
_SERIES_POINTS = 64
_ROOT_TOL = 1e-14


class ScanResolutionWarning(UserWarning):
    """Two spectral features fall inside one scan step."""


@dataclass(frozen=True)
class SecularEvaluation:
    theta: float
    k: complex
    h: complex
    f: complex


def _scan_step(a: float) -> float:
    return np.pi / (200 * a)


def _series_radius(model: CombModel) -> float:
    return min(0.25, 0.5 / model.a)


def _centers(model: CombModel) -> tuple[complex, ...]:
    pot = model.potential
    if isinstance(pot, PoschlTeller):
        return (0j, 1j, -1j)
    if pot.gamma != 0:
        # t has a pole at -i gamma/2 where h_V stays regular.
        return (0j, complex(0, -pot.gamma / 2))
    return (0j,)


def _raw_terms(model: CombModel, k):
    """A, A', B and B'/B with ``h = A/B``."""
    pot = model.potential
    if getattr(pot, "opaque", False):
        raise TransparencyError(
            "|w1| = 1 makes Omega = 0 and t identically zero: the nodes are opaque, "
            "the Bloch discriminant (.../2t) is undefined and the bands are flat",
            w1=pot.w1)
    t, dlog_t, q, dq = pot.bloch_terms(k, model.a)
    v = np.exp(1j * model.a * k)
    return 1 + q, dq, 2 * t * v, dlog_t + 1j * model.a


def _raw_h(model: CombModel, k):
    a_, da, b, dlog_b = _raw_terms(model, k)
    h = a_ / b
    return h, (da - a_ * dlog_b) / b


@lru_cache(maxsize=512)
def _taylor_coefficients(model: CombModel, center: complex) -> np.ndarray:
    rho = _series_radius(model)
    phi = 2 * np.pi * np.arange(_SERIES_POINTS) / _SERIES_POINTS
    # Offset the nodes by half a step so no node sits on the real or imaginary axis.
    nodes = center + rho * np.exp(1j * (phi + np.pi / _SERIES_POINTS))
    values, _ = _raw_h(model, nodes)
    n = np.arange(_SERIES_POINTS)
    coeffs = np.fft.fft(values) / _SERIES_POINTS * np.exp(-1j * n * np.pi / _SERIES_POINTS)
    return coeffs / rho ** n


def _h_and_dh(model: CombModel, k):
    """``h_V`` and ``dh_V/dk`` at arbitrary complex momenta."""
    k = np.asarray(k, dtype=complex)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    h = np.empty_like(k)
    dh = np.empty_like(k)
    todo = np.ones(k.shape, dtype=bool)
    r0 = 0.5 * _series_radius(model)
    for c in _centers(model):
        near = todo & (np.abs(k - c) < r0)
        if np.any(near):
            coeffs = _taylor_coefficients(model, c)
            z = k[near] - c
            h[near] = np.polynomial.polynomial.polyval(z, coeffs)
            dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))
            dh[near] = np.polynomial.polynomial.polyval(z, dcoeffs)
            todo &= ~near
    if np.any(todo):
        h[todo], dh[todo] = _raw_h(model, k[todo])
    if scalar:
        return h[0], dh[0]
    return h, dh


def h_v(model: CombModel, k):
    """Bloch discriminant ``(e^{-ika} + e^{ika} det S)/(2t)``.

    Raises
    ------
    TransparencyError
        For an opaque delta-delta' node (``|w1| = 1``).
    """
    return _h_and_dh(model, k)[0]


def h_v_derivative(model: CombModel, k):
    return _h_and_dh(model, k)[1]


def secular(model: CombModel, theta: float, k) -> SecularEvaluation:
    h = h_v(model, k)
    return SecularEvaluation(theta, k, h, np.cos(theta) - h)


def _h_real(model: CombModel, k: float) -> float:
    return float(np.real(h_v(model, complex(k))))


def _dh_real(model: CombModel, k: float) -> float:
    return float(np.real(h_v_derivative(model, complex(k))))


@lru_cache(maxsize=256)
def _monotone_pieces(model: CombModel, k_max: float) -> tuple[float, ...]:
    """Breakpoints ``0 = c_0 < c_1 < ... < k_max`` between which h_V is monotone."""
    step = _scan_step(model.a)
    grid = np.arange(step / 2, k_max, step)
    if grid.size == 0:
        return (0.0, k_max)
    dh = np.real(h_v_derivative(model, grid.astype(complex)))
    sign = np.sign(dh)
    cuts = [0.0]
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        root = find_root(lambda x: _dh_real(model, x), RootBracket(grid[i], grid[i + 1]),
                         tol=_ROOT_TOL)
        cuts.append(root)
    cuts.append(float(k_max))
    return tuple(cuts)


def _solve_on_piece(g, lo: float, hi: float):
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if np.sign(glo) == np.sign(ghi):
        return None
    return find_root(g, RootBracket(lo, hi), tol=_ROOT_TOL)


def band_edges(model: CombModel, e_max: float) -> list[tuple[float, float]]:
    """Allowed momentum intervals ``[k_lo, k_hi]`` with ``|h_V| <= 1`` inside ``(0, sqrt(e_max)]``.

    Touching bands (no gap between them) are merged, so the free comb returns
    the single interval ``[0, sqrt(e_max)]``.
    """
    if not e_max > 0:
        raise ValueError(f"e_max must be positive, got {e_max}")
    k_max = float(np.sqrt(e_max))
    cuts = _monotone_pieces(model, k_max)
    intervals: list[list[float]] = []
    for p0, p1 in zip(cuts[:-1], cuts[1:]):
        h0, h1 = _h_real(model, p0), _h_real(model, p1)
        ends = []
        for end, h_end, other in ((p0, h0, p1), (p1, h1, p0)):
            if abs(h_end) <= 1:
                ends.append(end)
                continue
            level = np.sign(h_end)
            root = _solve_on_piece(lambda x: _h_real(model, x) - level, min(end, other),
                                   max(end, other))
            ends.append(root)
        if ends[0] is None or ends[1] is None:
            continue
        lo, hi = sorted(ends)
        if intervals and lo - intervals[-1][1] < 1e-9:
            intervals[-1][1] = hi
        else:
            intervals.append([lo, hi])
    step = _scan_step(model.a)
    for (_, hi), (lo, _) in zip(intervals[:-1], intervals[1:]):
        if lo - hi < step:
            warnings.warn(f"gap [{hi:.6g}, {lo:.6g}] is narrower than the scan step {step:.3g}",
                          ScanResolutionWarning, stacklevel=2)
    return [(lo, hi) for lo, hi in intervals]


def dispersion(model: CombModel, theta: float, n_bands: int) -> np.ndarray:
    """The ``n_bands`` lowest positive roots of ``cos(theta) - h_V(k)``."""
    if n_bands < 1:
        raise ValueError("n_bands must be at least 1")
    theta = abs(float(theta))
    if theta > np.pi + 1e-12:
        raise ValueError(f"theta must lie in [-pi, pi], got {theta}")
    c = np.cos(theta)
    k_max = (n_bands + 1) * np.pi / model.a
    for _ in range(12):
        cuts = _monotone_pieces(model, k_max)
        roots = []
        for p0, p1 in zip(cuts[:-1], cuts[1:]):
            root = _solve_on_piece(lambda x: c - _h_real(model, x), p0, p1)
            if root is not None and root > 0 and (not roots or root - roots[-1] > 1e-12):
                roots.append(root)
            if len(roots) == n_bands:
                return np.array(roots)
        k_max *= 2
    raise RootBracketingError(f"found only {len(roots)} of {n_bands} dispersion roots "
                              f"below k = {k_max / 2:.3g}", theta=theta)


@dataclass(frozen=True)
class NegativeBand:
    """States with imaginary momentum ``k = i kappa`` for ``theta in [0, theta_c]``."""

    model: CombModel = field(repr=False)
    theta_c: float
    kappa_min: float
    kappa_lo: float
    theta_nodes: tuple[float, ...]
    kappa_samples: tuple[float, ...]

    def kappa(self, theta: float) -> float:
        """Solve ``cos(theta) = h_V(i kappa)`` on the band."""
        theta = abs(float(theta))
        if self.kappa_lo == self.kappa_min:
            return self.kappa_min  # flat band of decoupled cells
        if theta > self.theta_c + 1e-12:
            raise ValueError(f"theta={theta} lies outside the negative band [0, {self.theta_c}]")
        c = np.cos(theta)
        g = lambda x: c - _h_real(self.model, 1j * x)  # noqa: E731
        root = _solve_on_piece(g, self.kappa_lo, self.kappa_min)
        if root is None:
            # Band edges: the root sits on an endpoint up to rounding.
            for end in (self.kappa_min, self.kappa_lo):
                if abs(g(end)) < 1e-12:
                    return end
        if root is None:
            raise RootBracketingError(
                f"cos(theta) - h_V(i kappa) keeps its sign on [{self.kappa_lo}, {self.kappa_min}]",
                theta=theta)
        return root


    def kappas(self, theta) -> np.ndarray:
        """Vectorised :meth:`kappa`: safeguarded Newton on all phases at once."""
        theta = np.abs(np.atleast_1d(np.asarray(theta, dtype=float)))
        if self.kappa_lo == self.kappa_min:
            return np.full(theta.shape, self.kappa_min)
        if np.any(theta > self.theta_c + 1e-12):
            raise ValueError(f"theta lies outside the negative band [0, {self.theta_c}]")
        c = np.cos(theta)
        lo = np.full(theta.shape, self.kappa_lo)
        hi = np.full(theta.shape, self.kappa_min)
        # g(kappa) = cos(theta) - h(i kappa) is >= 0 at kappa_lo and <= 0 at kappa_min.
        nodes = np.asarray(self.theta_nodes)
        x = np.interp(theta, nodes, np.asarray(self.kappa_samples))
        x = np.clip(x, lo, hi)
        for _ in range(100):
            h, dh = _h_and_dh(self.model, 1j * x)
            g = c - h.real
            dg = -(1j * dh).real
            lo = np.where(g > 0, x, lo)
            hi = np.where(g < 0, x, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = g / dg
            x_new = x - step
            bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
            x_new = np.where(bad, 0.5 * (lo + hi), x_new)
            done = (np.abs(x_new - x) <= 4e-16 * np.maximum(x, 1.0)) | (g == 0) \
                | (hi - lo <= 4e-16 * np.maximum(hi, 1.0))
            x = np.where(g == 0, x, x_new)
            if np.all(done):
                return x
        raise RootBracketingError("Newton iteration for kappa(theta) did not converge",
                                  theta_max=float(theta.max()))


def _h_imag_axis(model: CombModel, kappa):
    return np.real(h_v(model, 1j * np.asarray(kappa, dtype=float)))


@lru_cache(maxsize=256)
def negative_band(model: CombModel, n_theta: int = 64) -> NegativeBand | None:
    """Negative-energy band, or ``None`` when ``|h_V(i kappa)| > 1`` for all ``kappa``.

    Raises
    ------
    RootBracketingError
        If the edge of the band cannot be bracketed; the scanned profile is
        attached to the error context.
    UnsupportedSpectrumError
        If more than one negative band is found.
    """
    kappa = np.linspace(0.0, KAPPA_CAP, 4001)
    if getattr(model.potential, "opaque", False):
        return _opaque_negative_band(model, kappa, n_theta)
    h = _h_imag_axis(model, kappa)
    inside = np.abs(h) <= 1
    if not np.any(inside):
        return None
    starts = np.nonzero(inside & ~np.r_[False, inside[:-1]])[0]
    if len(starts) > 1:
        raise UnsupportedSpectrumError(
            f"{len(starts)} negative bands found; only a single negative band is supported",
            kappa_starts=kappa[starts].tolist())
    top = int(np.nonzero(inside)[0][-1])
    if top == len(kappa) - 1:
        raise RootBracketingError("negative band extends past the kappa scan cap",
                                  profile=h.tolist())
    level = np.sign(h[top + 1])
    g = lambda x: _h_real(model, 1j * x) - level  # noqa: E731
    if level < 0:
        raise UnsupportedSpectrumError(
            "the deepest negative-energy state sits at theta = pi; only bands whose "
            "deepest state is at theta = 0 are supported")
    kappa_min = find_root(g, RootBracket(kappa[top], kappa[top + 1]), tol=_ROOT_TOL)
    if kappa_min < 1e-10:
        return None  # tangency at k = 0, as for the free comb
    start = int(starts[0])
    if start == 0:
        kappa_lo = 0.0
        theta_c = float(np.arccos(np.clip(_h_zero(model), -1.0, 1.0)))
    else:
        level = np.sign(h[start - 1])
        g = lambda x: _h_real(model, 1j * x) - level  # noqa: E731
        kappa_lo = find_root(g, RootBracket(kappa[start - 1], kappa[start]), tol=_ROOT_TOL)
        theta_c = np.pi
    band = NegativeBand(model, theta_c, kappa_min, kappa_lo, (), ())
    nodes, _ = gauss_legendre(0.0, theta_c, n_theta)
    samples = tuple(band.kappa(th) for th in nodes)
    return NegativeBand(model, theta_c, kappa_min, kappa_lo, tuple(nodes), samples)


def _opaque_negative_band(model: CombModel, kappa, n_theta: int) -> NegativeBand | None:
    # Decoupled cells: bound states are zeros of 1 + det S e^{2ika}, flat in theta.
    pot = model.potential

    def g(x):
        return float(np.real(1 + pot.bloch_terms(np.array([1j * x]), model.a)[2][0]))

    grid = kappa[1:]
    values = np.real(1 + pot.bloch_terms(1j * grid, model.a)[2])
    roots = [find_root(g, RootBracket(grid[i], grid[i + 1]), tol=_ROOT_TOL)
             for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]]
    if not roots:
        return None
    if len(roots) > 1:
        raise UnsupportedSpectrumError(
            f"{len(roots)} negative bands found; only a single negative band is supported",
            kappa_roots=roots)
    kappa0 = roots[0]
    nodes, _ = gauss_legendre(0.0, np.pi, n_theta)
    return NegativeBand(model, np.pi, kappa0, kappa0, tuple(nodes), (kappa0,) * n_theta)


def _h_zero(model: CombModel) -> float:
    return float(np.real(h_v(model, 0j)))


def mass(model: CombModel) -> float:
    """Unitarity mass ``kappa_min``, zero when there is no negative band."""
    band = negative_band(model)
    return 0.0 if band is None else band.kappa_min


@dataclass(frozen=True)
class Band:
    index: int
    theta: np.ndarray
    k: np.ndarray
    energy: np.ndarray


@dataclass(frozen=True)
class BandStructure:
    """Bands on a Bloch-phase grid.

    Negative-energy states are stored with ``k = i kappa`` (complex) and
    ``energy = -kappa^2``; band indices count from the lowest band.
    """

    bands: tuple[Band, ...]
    negative_band: NegativeBand | None
    mass: float


def band_structure(model: CombModel, n_bands: int = 3, theta=None) -> BandStructure:
    if theta is None:
        theta = np.linspace(0.0, np.pi, 65)
    theta = np.asarray(theta, dtype=float)
    neg = negative_band(model)
    rows: dict[int, list[tuple[float, complex]]] = {i: [] for i in range(1, n_bands + 1)}
    for th in theta:
        offset = 0
        if neg is not None and abs(th) <= neg.theta_c:
            rows[1].append((th, 1j * neg.kappa(th)))
            offset = 1
        if n_bands - offset > 0:
            for i, k in enumerate(dispersion(model, th, n_bands - offset)):
                rows[offset + i + 1].append((th, complex(k)))
    bands = []
    for index, entries in rows.items():
        th = np.array([e[0] for e in entries])
        k = np.array([e[1] for e in entries])
        bands.append(Band(index, th, k, np.real(k * k)))
    return BandStructure(tuple(bands), neg, 0.0 if neg is None else neg.kappa_min)


# Contour ingredients ---------------------------------------------------------

def _near_center(model: CombModel, k):
    r0 = 0.5 * _series_radius(model)
    near = np.zeros(np.shape(k), dtype=bool)
    for c in _centers(model):
        near |= np.abs(k - c) < r0
    return near


def _branch(a_, s):
    """Choose the square-root branch with ``|a + s| >= |a - s|``."""
    return np.where(np.abs(a_ + s) < np.abs(a_ - s), -s, s)


def bloch_averaged_log_derivative(model: CombModel, k):
    """``(1/pi) int_0^pi d theta  d/dk log f_theta(k) = h'/sqrt(h^2 - 1)``.

    The branch of the root satisfies ``|h + sqrt(h^2 - 1)| >= 1``, which is the
    analytic continuation from the upper half plane.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if model.is_free:
        # h = cos(ka) touches 1 at the vertex; the closed form avoids the cancellation.
        return np.full_like(k, -1j * model.a)
    out = np.empty_like(k)
    near = _near_center(model, k)
    if np.any(near):
        h, dh = _h_and_dh(model, k[near])
        s = _branch(h, np.sqrt(h * h - 1))
        out[near] = dh / s
    far = ~near
    if np.any(far):
        a_, da, b, dlog_b = _raw_terms(model, k[far])
        s = _branch(a_, np.sqrt(a_ * a_ - b * b))
        out[far] = da / s - (a_ / s) * dlog_b
    return out


def bloch_averaged_interaction(model: CombModel, k):
    """Bloch-phase average of ``d/dk log(1 - 2 t cos(theta) e^{ika} + det S e^{2ika})``.

    This is the part of ``d log f_theta / dk`` left after removing the bulk
    term ``-ia`` and the single-node term ``-t'/t``; it decays exponentially
    in the upper half plane. Opaque nodes (``t = 0``) are supported.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    pot = model.potential
    if getattr(pot, "opaque", False):
        _, _, q, dq = pot.bloch_terms(k, model.a)
        return dq / (1 + q)
    if model.is_free:
        return np.zeros_like(k)
    out = np.empty_like(k)
    near = _near_center(model, k)
    if np.any(near):
        dlog_t = pot.log_derivative_t(k[near])
        out[near] = bloch_averaged_log_derivative(model, k[near]) + dlog_t + 1j * model.a
    far = ~near
    if np.any(far):
        a_, da, b, dlog_b = _raw_terms(model, k[far])
        s = _branch(a_, np.sqrt(a_ * a_ - b * b))
        out[far] = (da - b * b * dlog_b / (a_ + s)) / s
    return out


def log_derivative_f(model: CombModel, theta: float, k):
    """``d/dk log f_theta(k) = -h'/(cos(theta) - h)`` at a fixed Bloch phase."""
    h, dh = _h_and_dh(model, k)
    return -dh / (np.cos(theta) - h)


def interaction_log_derivative(model: CombModel, theta: float, k):
    """``d/dk log P_theta`` with ``P = 1 - 2 t cos(theta) e^{ika} + det S e^{2ika}``."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    pot = model.potential
    c = np.cos(theta)
    if getattr(pot, "opaque", False):
        _, _, q, dq = pot.bloch_terms(k, model.a)
        return dq / (1 + q)
    out = np.empty_like(k)
    near = _near_center(model, k)
    if np.any(near):
        dlog_t = pot.log_derivative_t(k[near])
        out[near] = log_derivative_f(model, theta, k[near]) + dlog_t + 1j * model.a
    far = ~near
    if np.any(far):
        a_, da, b, dlog_b = _raw_terms(model, k[far])
        out[far] = (da - c * b * dlog_b) / (a_ - c * b)
    return out
