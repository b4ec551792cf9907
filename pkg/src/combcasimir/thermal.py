"""Finite-temperature free energy, entropy and Casimir pressure of a comb.

The thermal correction is a sum of the Boltzmann kernel ``I3`` over the
spectrum. As for the vacuum energy, the sum over real dispersion roots is
turned into a single integral along the ray ``k = xi e^{i gamma}``; the
negative-energy band, if any, is added separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import spectrum
from .errors import PolylogDomainError, StepCollisionError
from .numerics import QuadratureSpec, central_derivative, integrate, integrate_semi_infinite
from .scattering import CombModel
from .specialfn import ZETA3, polylog
from .vacuum import ContourSpec, _theta_rule, _check_vertex, casimir_pressure_t0, resolve_mass

__all__ = [
    "BoltzmannKernel",
    "ThermoPoint",
    "i3",
    "di3_dt",
    "delta_f",
    "entropy",
    "entropy_analytic",
    "pressure",
    "thermo_point",
]


@dataclass(frozen=True)
class BoltzmannKernel:
    """``lambda = sqrt(k^2 + m^2)/T`` with the principal square root."""

    lam: complex

    @classmethod
    def at(cls, k, m: float, T: float):
        return cls(np.sqrt(np.asarray(k, dtype=complex) ** 2 + m * m) / T)

    @property
    def boltzmann_factor(self):
        return np.exp(-self.lam)


@dataclass(frozen=True)
class ThermoPoint:
    T: float
    delta_f_per_area: float
    entropy_per_area: float
    pressure: float
    diagnostics: dict


def _lambda(k, m: float, T: float):
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    lam = np.sqrt(np.asarray(k, dtype=complex) ** 2 + m * m) / T
    if np.any(lam.real < 0):
        raise PolylogDomainError("Re lambda < 0: |e^{-lambda}| > 1", T=T, m=m)
    return lam


def i3(k, m: float, T: float):
    """Boltzmann kernel ``-(T^3/2pi) [lambda Li2(e^{-lambda}) + Li3(e^{-lambda})]``."""
    lam = _lambda(k, m, T)
    z = np.exp(-lam)
    out = -(T ** 3 / (2 * math.pi)) * (lam * polylog(2, z) + polylog(3, z))
    out = np.where(lam == 0, -T ** 3 * ZETA3 / (2 * math.pi), out)
    return out[()] if out.ndim == 0 else out


def di3_dt(k, m: float, T: float):
    """Temperature derivative of :func:`i3` at fixed ``k`` and ``m``."""
    lam = _lambda(k, m, T)
    z = np.exp(-lam)
    bracket = lam * polylog(2, z) + polylog(3, z)
    safe = np.where(lam == 0, 1.0, lam)
    log_term = np.where(lam == 0, 0.0, safe ** 2 * np.log(-np.expm1(-safe)))
    out = -(3 * T ** 2 / (2 * math.pi)) * bracket + (T ** 2 / (2 * math.pi)) * log_term
    return out[()] if out.ndim == 0 else out


def _bound_term(model: CombModel, m: float, T: float, kernel, spec: QuadratureSpec):
    band = spectrum.negative_band(model)
    if band is None:
        return 0.0, 0.0

    def integrand(theta):
        kappa = band.kappas(theta)
        omega = np.sqrt(np.maximum(m * m - kappa * kappa, 0.0))
        return np.real(kernel(omega, 0.0, T))

    value, err = integrate(integrand, 0.0, band.theta_c, spec)
    return value / math.pi, err / math.pi


def _ray_term(model: CombModel, m: float, T: float, kernel, contour: ContourSpec):
    gamma = contour.gamma_angle
    e_up = np.exp(1j * gamma)
    spec = contour.semi_infinite_spec
    scale = T / math.cos(gamma)

    if contour.theta_mode == "analytic":
        def integrand(xi):
            k = xi * e_up
            dlog = spectrum.bloch_averaged_log_derivative(model, k)
            return np.real(1j * kernel(k, m, T) * e_up * dlog) / math.pi

        value, err, _ = integrate_semi_infinite(integrand, 0.0, scale, spec)
        return value, err

    nodes, weights = _theta_rule(model, contour.theta_nodes)
    value = err = 0.0
    for th, w in zip(nodes, weights):
        _check_vertex(model, th)

        def integrand(xi, th=th):
            k = xi * e_up
            dlog = spectrum.log_derivative_f(model, th, k)
            return np.real(1j * kernel(k, m, T) * e_up * dlog) / math.pi

        v, e, _ = integrate_semi_infinite(integrand, 0.0, scale, spec)
        value += w * v / math.pi
        err += w * e / math.pi
    return value, err


def _free_energy(model: CombModel, T: float, contour: ContourSpec, kernel=i3):
    m = resolve_mass(model, contour)
    bound, bound_err = _bound_term(model, m, T, kernel, contour.quad)
    ray, ray_err = _ray_term(model, m, T, kernel, contour)
    return bound + ray, bound_err + ray_err


def delta_f(model: CombModel, T: float, contour: ContourSpec | None = None,
            full_output: bool = False):
    """Thermal free energy per unit area ``Delta F/A``.

    Returns the value, or ``(value, error_estimate)`` with ``full_output``.
    """
    value, err = _free_energy(model, T, contour or ContourSpec())
    return (value, err) if full_output else value


def _tight(contour: ContourSpec, rel_tol: float = 1e-12) -> ContourSpec:
    quad = contour.quad
    return replace(contour, quad=QuadratureSpec(min(quad.rel_tol, rel_tol),
                                                min(quad.abs_tol, 1e-16),
                                                quad.max_subdivisions),
                   xi_cutoff_policy=min(contour.xi_cutoff_policy, 1e-16))


def _temperature_step(T: float) -> float:
    return max(1e-3 * T, 1e-4)


def entropy(model: CombModel, T: float, contour: ContourSpec | None = None,
            step: float | None = None, full_output: bool = False):
    """Entropy per unit area ``-d(Delta F/A)/dT`` by Richardson-extrapolated differences.

    Raises
    ------
    StepCollisionError
        If ``T - step <= 0``.
    """
    contour = _tight(contour or ContourSpec())
    step = step or _temperature_step(T)
    if T - step <= 0:
        raise StepCollisionError(f"temperature step {step} reaches T <= 0 from T={T}",
                                 T=T, step=step)
    value, err = central_derivative(lambda t: delta_f(model, t, contour), T, step,
                                    full_output=True)
    return (-value, err) if full_output else -value


def entropy_analytic(model: CombModel, T: float, contour: ContourSpec | None = None,
                     full_output: bool = False):
    """Entropy from ``dI3/dT`` differentiated under the integral sign."""
    value, err = _free_energy(model, T, contour or ContourSpec(), kernel=di3_dt)
    return (-value, err) if full_output else -value


def pressure(model: CombModel, T: float, contour: ContourSpec | None = None,
             include_vacuum_part: bool = False, step: float | None = None,
             full_output: bool = False):
    """Casimir pressure ``-d(Delta F/A)/da``; the mass is recomputed at each spacing.

    With ``include_vacuum_part`` the zero-temperature pressure is added.
    """
    contour = contour or ContourSpec()
    fixed_mass = contour.m_offset
    tight = _tight(replace(contour, m_offset=None))
    step = step or 1e-3 * model.a
    if model.a - step < model.potential.support:
        raise StepCollisionError(f"spacing step {step} pushes the lattice below the node "
                                 f"support {model.potential.support}", a=model.a, step=step)
    if fixed_mass is not None:
        resolve_mass(model, contour)

    def free(a):
        return delta_f(model.with_spacing(a), T, tight)

    value, err = central_derivative(free, model.a, step, full_output=True)
    value = -value
    if include_vacuum_part:
        p0, e0 = casimir_pressure_t0(model, replace(contour, m_offset=None),
                                     full_output=True)
        value += p0
        err += e0
    return (value, err) if full_output else value


def thermo_point(model: CombModel, T: float, contour: ContourSpec | None = None,
                 include_vacuum_part: bool = False) -> ThermoPoint:
    contour = contour or ContourSpec()
    f, f_err = delta_f(model, T, contour, full_output=True)
    s, s_err = entropy(model, T, contour, full_output=True)
    p, p_err = pressure(model, T, contour, include_vacuum_part, full_output=True)
    return ThermoPoint(T, f, s, p, {"delta_f_error": f_err, "entropy_error": s_err,
                                    "pressure_error": p_err})
