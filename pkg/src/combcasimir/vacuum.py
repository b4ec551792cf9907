"""Zero-temperature Casimir energy per unit area of a comb.

The sum over zeros of the secular function is converted into an integral
along the wedge ``k = xi e^{+-i gamma}``. The bulk and single-node
divergences are removed by working with

    P_theta(k) = 1 - 2 t cos(theta) e^{ika} + det S e^{2ika}

on the upper ray, which differs from ``f_theta`` by the factor
``-e^{-ika}/(2t)``, and with its mirror image on the lower ray. The
Bloch-phase average of ``d log P/dk`` is available in closed form, so by
default the theta integral is done analytically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectrum
from .errors import ContourCrossingError, UnitarityViolationError
from .numerics import QuadratureSpec, central_derivative, gauss_legendre, integrate, \
    integrate_semi_infinite
from .scattering import CombModel, DeltaDeltaPrime
from .specialfn import branched_power_3_2

__all__ = [
    "ContourSpec",
    "VacuumResult",
    "ExperimentalModelWarning",
    "casimir_energy",
    "casimir_pressure_t0",
    "resolve_mass",
    "theta_split",
    "vertex_residue",
]

_PREFACTOR = 1.0 / (6 * math.pi ** 2)


class ExperimentalModelWarning(UserWarning):
    """The requested model is outside the validated parameter range."""


@dataclass(frozen=True)
class ContourSpec:
    """Integration contour and accuracy settings.

    Parameters
    ----------
    gamma_angle
        Half opening angle of the wedge, strictly inside ``(0, pi/4)``.
    m_offset
        Field mass. ``None`` uses the unitarity mass of the model; an explicit
        value below it is rejected.
    xi_cutoff_policy
        Absolute tolerance for truncating the semi-infinite ray integrals.
    quad
        Tolerances for the adaptive quadrature.
    theta_nodes
        Gauss-Legendre nodes for Bloch-phase integrals.
    theta_mode
        ``"analytic"`` averages over the Bloch phase in closed form;
        ``"quadrature"`` integrates node by node.
    """

    gamma_angle: float = math.pi / 8
    m_offset: float | None = None
    xi_cutoff_policy: float = 1e-14
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    theta_nodes: int = 64
    theta_mode: str = "analytic"

    def __post_init__(self):
        if not 0 < self.gamma_angle < math.pi / 4:
            raise ValueError(f"gamma_angle must lie in (0, pi/4), got {self.gamma_angle}")
        if self.m_offset is not None and self.m_offset < 0:
            raise ValueError("m_offset must be non-negative")
        if self.theta_mode not in ("analytic", "quadrature"):
            raise ValueError(f"theta_mode must be 'analytic' or 'quadrature', "
                             f"got {self.theta_mode!r}")
        if self.theta_nodes < 2:
            raise ValueError("theta_nodes must be at least 2")

    @property
    def semi_infinite_spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad.rel_tol, self.xi_cutoff_policy,
                              self.quad.max_subdivisions)


@dataclass(frozen=True)
class VacuumResult:
    e0_per_area: float
    bound_part: float
    contour_part: float
    diagnostics: dict

    @property
    def error(self) -> float:
        return self.diagnostics["bound_error"] + self.diagnostics["contour_error"]

    @property
    def im_residue(self) -> float:
        return self.diagnostics["im_residue"]


def resolve_mass(model: CombModel, contour: ContourSpec) -> float:
    """Field mass for ``model``: the unitarity mass unless a larger one is given."""
    m_min = spectrum.mass(model)
    if contour.m_offset is None:
        return m_min
    if contour.m_offset < m_min * (1 - 1e-10):
        raise UnitarityViolationError(
            f"mass {contour.m_offset} is below kappa_min = {m_min}; negative-energy "
            "states would make the field theory non-unitary", m=contour.m_offset,
            kappa_min=m_min)
    return float(contour.m_offset)


def vertex_residue(model: CombModel) -> int:
    """Residue at ``k = 0`` of the Bloch-averaged interaction (order of the zero of t)."""
    k0 = 1e-7 * np.exp(0.3j)
    r = complex(k0 * spectrum.bloch_averaged_interaction(model, np.array([k0]))[0])
    residue = round(r.real)
    if abs(r - residue) > 1e-3:
        raise ArithmeticError(f"non-integer residue {r} of the interaction at k = 0")
    return residue


def theta_split(model: CombModel) -> float | None:
    """Bloch phase at which a band edge sits at ``k = 0``, if any."""
    band = spectrum.negative_band(model)
    if band is not None:
        return band.theta_c
    if getattr(model.potential, "opaque", False):
        return None
    h0 = float(np.real(spectrum.h_v(model, 0j)))
    if abs(h0) < 1:
        return float(np.arccos(h0))
    return None


def _theta_rule(model: CombModel, n: int):
    split = theta_split(model)
    if split is None or split <= 0 or split >= math.pi:
        return gauss_legendre(0.0, math.pi, n)
    n1 = max(2, round(n * split / math.pi))
    n2 = max(2, n - n1)
    x1, w1 = gauss_legendre(0.0, split, n1)
    x2, w2 = gauss_legendre(split, math.pi, n2)
    return np.concatenate([x1, x2]), np.concatenate([w1, w2])


def _decay_scale(model: CombModel, gamma: float) -> float:
    # Interaction terms fall off like exp(-2 (a - support) Im k).
    gap = max(model.a - model.potential.support, 1e-3 * model.a)
    return 1.0 / (2 * gap * math.sin(gamma))


def _bound_part(model: CombModel, m: float, spec: QuadratureSpec):
    band = spectrum.negative_band(model)
    if band is None:
        return 0.0, 0.0

    def integrand(theta):
        kappa = band.kappas(theta)
        return np.maximum(m * m - kappa * kappa, 0.0) ** 1.5

    value, err = integrate(integrand, 0.0, band.theta_c, spec)
    scale = -1.0 / (6 * math.pi ** 2)
    return scale * value, abs(scale) * err


def _check_vertex(model: CombModel, theta: float):
    f0 = np.cos(theta) - spectrum.h_v(model, 0j)
    if abs(f0) < 1e-8:
        raise ContourCrossingError(
            f"f_theta vanishes at the contour vertex (theta={theta}, |f|={abs(f0):.2e})",
            theta=theta, xi=0.0)


def _upper_interaction(model: CombModel, k, theta):
    if theta is None:
        return spectrum.bloch_averaged_interaction(model, k)
    return spectrum.interaction_log_derivative(model, theta, k)


def _lower_interaction(model: CombModel, k, theta):
    # Mirror image of P on the lower ray: d log P_- = d log P_+ - 2ia - D'/D.
    d, dd = model.potential.det_s(k)
    return _upper_interaction(model, k, theta) - 2j * model.a - dd / d


def _ray_integrals(model: CombModel, m: float, contour: ContourSpec, theta=None,
                   reference: CombModel | None = None):
    gamma = contour.gamma_angle
    e_up, e_dn = np.exp(1j * gamma), np.exp(-1j * gamma)
    spec = contour.semi_infinite_spec
    scale = _decay_scale(model, gamma)

    def upper(xi):
        k = xi * e_up
        inter = _upper_interaction(model, k, theta)
        if reference is not None:
            inter = inter - _upper_interaction(reference, k, theta)
        return np.imag(branched_power_3_2(m, k) * e_up * inter)

    def two_ray(xi):
        k_up, k_dn = xi * e_up, xi * e_dn
        x_up = branched_power_3_2(m, k_up) * e_up * _upper_interaction(model, k_up, theta)
        x_dn = branched_power_3_2(m, k_dn) * e_dn * _lower_interaction(model, k_dn, theta)
        if reference is not None:
            x_up = x_up - branched_power_3_2(m, k_up) * e_up * _upper_interaction(
                reference, k_up, theta)
            x_dn = x_dn - branched_power_3_2(m, k_dn) * e_dn * _lower_interaction(
                reference, k_dn, theta)
        return -(x_dn - x_up) / 2j

    value, err, xi_max = integrate_semi_infinite(upper, 0.0, scale, spec)
    # Diagnostic only: the direct lower-ray form carries rounding noise, so a
    # fixed panel rule over the same range is used instead of adaptive refinement.
    n_panels = max(1, math.ceil(xi_max / scale))
    edges = np.linspace(0.0, xi_max, n_panels + 1)
    x, w = gauss_legendre(0.0, 1.0, 30)
    nodes = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
    wts = (np.diff(edges)[:, None] * w[None, :]).ravel()
    # e^{2ika} grows on the lower ray; for wide lattices the diagnostic overflows to NaN.
    with np.errstate(over="ignore", invalid="ignore"):
        both = np.sum(wts * two_ray(nodes))
    return value, err, complex(both), xi_max


def casimir_energy(model: CombModel, contour: ContourSpec | None = None,
                   reference_spacing: float | None = None) -> VacuumResult:
    """Casimir energy per unit area ``E0/A`` of the comb.

    Parameters
    ----------
    model
        The comb.
    contour
        Contour and tolerance settings; defaults to ``ContourSpec()``.
    reference_spacing
        Diagnostic only. Subtract the interaction integrand of the same comb
        at spacing ``a0`` instead of taking the ``a0 -> inf`` limit.

    Returns
    -------
    VacuumResult
        ``e0_per_area = bound_part + contour_part``. The diagnostics hold the
        quadrature errors, the imaginary residue of the two-ray form and the
        ray truncation point.
    """
    contour = contour or ContourSpec()
    m = resolve_mass(model, contour)
    pot = model.potential
    if isinstance(pot, DeltaDeltaPrime) and spectrum.negative_band(model) is not None:
        warnings.warn("delta-delta' comb with a negative band: the massive vacuum energy "
                      "is experimental for this model", ExperimentalModelWarning, stacklevel=2)
    reference = None if reference_spacing is None else model.with_spacing(reference_spacing)

    bound, bound_err = _bound_part(model, m, contour.quad)

    if contour.theta_mode == "analytic" or getattr(pot, "opaque", False):
        value, err, both, xi_max = _ray_integrals(model, m, contour, None, reference)
    else:
        nodes, weights = _theta_rule(model, contour.theta_nodes)
        value = err = 0.0
        both = 0j
        xi_max = 0.0
        for th, w in zip(nodes, weights):
            _check_vertex(model, th)
            v, e, b, x = _ray_integrals(model, m, contour, th, reference)
            value += w * v / math.pi
            err += w * e / math.pi
            both += w * b / math.pi
            xi_max = max(xi_max, x)

    # The single-node subtraction has a pole of residue R at the vertex. Its
    # contribution (gamma - pi/2) m^3 R cancels the gamma dependence of the ray
    # integral and makes the a0 -> inf reference lattice contribute nothing.
    arc = (contour.gamma_angle - math.pi / 2) * m ** 3 * vertex_residue(model)
    if reference is not None:
        arc -= (contour.gamma_angle - math.pi / 2) * m ** 3 * vertex_residue(reference)
    contour_part = _PREFACTOR * (value + arc)
    both += arc
    diagnostics = {
        "mass": m,
        "bound_error": bound_err,
        "contour_error": _PREFACTOR * err,
        "im_residue": _PREFACTOR * float(np.imag(both)),
        "two_ray_real": _PREFACTOR * float(np.real(both)),
        "xi_max": xi_max,
        "gamma_angle": contour.gamma_angle,
        "theta_mode": contour.theta_mode,
    }
    return VacuumResult(bound + contour_part, bound, contour_part, diagnostics)


def casimir_pressure_t0(model: CombModel, contour: ContourSpec | None = None,
                        step: float | None = None, full_output: bool = False):
    """Zero-temperature Casimir pressure ``-dE0/da`` at fixed couplings.

    The unitarity mass is recomputed at each displaced spacing.
    """
    contour = contour or ContourSpec()
    step = step or 1e-3 * model.a
    tight = replace(contour, quad=QuadratureSpec(min(contour.quad.rel_tol, 1e-11),
                                                 contour.quad.abs_tol,
                                                 contour.quad.max_subdivisions))

    def energy(a):
        return casimir_energy(model.with_spacing(a), tight).e0_per_area

    value, err = central_derivative(energy, model.a, step, full_output=True)
    return (-value, err) if full_output else -value
