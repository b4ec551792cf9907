"""Quadrature, bracketed root finding and finite differences.

Integrands are expected to be vectorised: they receive a 1-D float array of
abscissae and return an array of (possibly complex) values of the same shape.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NoSignChangeError, QuadratureBudgetError, TailEstimateError

__all__ = [
    "QuadratureSpec",
    "RootBracket",
    "NonSmoothWarning",
    "integrate",
    "integrate_semi_infinite",
    "find_root",
    "central_derivative",
    "gauss_legendre",
]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError(f"abs_tol must be non-negative, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")


class NonSmoothWarning(UserWarning):
    """Raised when a finite-difference derivative looks unreliable."""


# Gauss-Kronrod 7/15 pair.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights on the same 15 nodes (zero on the Kronrod-only nodes).
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]


def _gk_batch(f, a: np.ndarray, b: np.ndarray):
    """Apply the 15-point rule to many intervals with a single call to ``f``."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)]
        raise FloatingPointError(f"integrand is not finite at x={bad[:3]}")
    kron = half * (fx @ _KW)
    gauss = half * (fx @ _GW)
    return kron, np.abs(kron - gauss)


def integrate(f: Callable, lo: float, hi: float, spec: QuadratureSpec | None = None,
              initial_intervals: int = 1):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    Returns
    -------
    value, error : complex or float, float
        The integral and its estimated absolute error.

    Raises
    ------
    QuadratureBudgetError
        If ``spec.max_subdivisions`` is reached before the error target.
    """
    spec = spec or QuadratureSpec()
    if hi == lo:
        return 0.0, 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    edges = np.linspace(lo, hi, max(1, initial_intervals) + 1)
    vals, errs = _gk_batch(f, edges[:-1], edges[1:])
    heap = [(-e, i, a, b, v) for i, (a, b, v, e) in
            enumerate(zip(edges[:-1], edges[1:], vals, errs))]
    heapq.heapify(heap)
    total = complex(np.sum(vals))
    err = float(np.sum(errs))
    counter = len(heap)
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if counter >= spec.max_subdivisions:
            raise QuadratureBudgetError(
                f"quadrature budget of {spec.max_subdivisions} intervals exhausted "
                f"on [{lo}, {hi}] (value {total:.6g}, error {err:.3g})",
                lo=lo, hi=hi, error=err)
        # Bisect the worst few intervals together; amortises the call overhead.
        batch = [heapq.heappop(heap) for _ in range(min(8, len(heap)))]
        a = np.array([item[2] for item in batch])
        b = np.array([item[3] for item in batch])
        m = 0.5 * (a + b)
        if np.any((m <= a) | (m >= b)):
            raise QuadratureBudgetError(
                f"interval cannot be bisected further near x={a[0]}", lo=lo, hi=hi, error=err)
        new_vals, new_errs = _gk_batch(f, np.concatenate([a, m]), np.concatenate([m, b]))
        for item in batch:
            total -= item[4]
            err += item[0]
        n = len(batch)
        for j in range(2 * n):
            left = a[j] if j < n else m[j - n]
            right = m[j] if j < n else b[j - n]
            heapq.heappush(heap, (-new_errs[j], counter, left, right, new_vals[j]))
            counter += 1
            total += new_vals[j]
            err += new_errs[j]
    # Re-sum to avoid drift from the running updates.
    total = sum(item[4] for item in heap)
    err = sum(-item[0] for item in heap)
    total = complex(total) if np.iscomplexobj(vals) else float(total)
    return sign * total, float(err)


def integrate_semi_infinite(f: Callable, lo: float, decay_scale: float,
                            spec: QuadratureSpec | None = None,
                            max_panels: int = 4000):
    """Integrate an exponentially decaying ``f`` over ``[lo, inf)``.

    The half-line is consumed in panels of width ``decay_scale``. Integration
    stops once two consecutive panels and the exponential tail bound
    ``|f(x_end)| * decay_scale`` all fall below the requested tolerance.

    Returns
    -------
    value, error, x_max
        Truncated integral, error estimate including the tail bound, and the
        truncation point.
    """
    spec = spec or QuadratureSpec()
    if not decay_scale > 0:
        raise ValueError("decay_scale must be positive")
    panel_spec = QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions)
    total = 0.0
    err = 0.0
    quiet = 0
    x = lo
    for _ in range(max_panels):
        value, e = integrate(f, x, x + decay_scale, panel_spec, initial_intervals=2)
        total += value
        err += e
        x += decay_scale
        edge = abs(complex(np.asarray(f(np.array([x])))[0]))
        target = max(spec.abs_tol, spec.rel_tol * abs(total))
        if abs(value) < 0.01 * target and edge * decay_scale < 0.01 * target:
            quiet += 1
            if quiet >= 2:
                return total, err + edge * decay_scale, x
        else:
            quiet = 0
    raise TailEstimateError(
        f"integrand has not decayed after {max_panels} panels of width {decay_scale}",
        lo=lo, x=x, value=total)


def find_root(f: Callable[[float], float], bracket: RootBracket, tol: float = 1e-12) -> float:
    """Brent root of ``f`` inside ``bracket``."""
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChangeError(
            f"no sign change on [{bracket.lo}, {bracket.hi}]: f={flo:.3g}, {fhi:.3g}",
            lo=bracket.lo, hi=bracket.hi)
    return float(brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                        maxiter=500))


def central_derivative(f: Callable[[float], float], x: float, h: float,
                       richardson: bool = True, full_output: bool = False):
    """Symmetric difference quotient, optionally Richardson-extrapolated.

    With ``full_output`` the return value is ``(derivative, error_estimate)``.
    A :class:`NonSmoothWarning` is emitted when the second difference grows as
    the step shrinks, which signals a kink or jump near ``x``.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    fp, fm = f(x + h), f(x - h)
    d1 = (fp - fm) / (2 * h)
    if not richardson:
        return (d1, math.nan) if full_output else d1
    fp2, fm2 = f(x + h / 2), f(x - h / 2)
    d2 = (fp2 - fm2) / h
    value = (4 * d2 - d1) / 3
    error = abs(d2 - d1) / 3

    f0 = f(x)
    curv1 = (fp - 2 * f0 + fm) / h ** 2
    curv2 = (fp2 - 2 * f0 + fm2) / (h / 2) ** 2
    scale = max(abs(fp), abs(fm), abs(f0), 1e-300)
    if abs(curv2) > 1.5 * abs(curv1) + 1e3 * np.finfo(float).eps * scale / h ** 2:
        warnings.warn(f"finite difference at x={x} looks non-smooth "
                      f"(second differences {curv1:.3g} -> {curv2:.3g})",
                      NonSmoothWarning, stacklevel=2)
    return (value, error) if full_output else value


def gauss_legendre(lo: float, hi: float, n: int):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[lo, hi]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w
