"""Polylogarithms of order 2 and 3 and the branched power (m^2 + k^2)^(3/2)."""

from __future__ import annotations

from fractions import Fraction
from math import factorial

import numpy as np

from .errors import BranchCutError, PolylogDomainError

__all__ = ["ZETA2", "ZETA3", "PI_SQUARED", "polylog", "branched_power_3_2"]

PI_SQUARED = 9.8696044010893586188
ZETA2 = 1.6449340668482264365
ZETA3 = 1.2020569031595942854

_N_TERMS = 64
_SWITCH_RADIUS = 0.5


def _bernoulli(n_max: int) -> list[Fraction]:
    b = [Fraction(0)] * (n_max + 1)
    b[0] = Fraction(1)
    for m in range(1, n_max + 1):
        b[m] = -sum(Fraction(factorial(m + 1), factorial(j) * factorial(m + 1 - j)) * b[j]
                    for j in range(m)) / (m + 1)
    return b


def _zeta_nonpositive(j: int, bern: list[Fraction]) -> Fraction:
    """zeta(-j) for integer j >= 0."""
    if j == 0:
        return Fraction(-1, 2)
    return -bern[j + 1] / (j + 1)


def _log_series_coefficients(s: int) -> np.ndarray:
    """Coefficients zeta(s - n) / n! of the expansion of Li_s(e^mu) in mu."""
    bern = _bernoulli(_N_TERMS + 2)
    coeffs = np.zeros(_N_TERMS)
    exact = {2: ZETA2, 3: ZETA3}
    for n in range(_N_TERMS):
        order = s - n
        if order == 1:
            continue  # replaced by the logarithmic term
        if order >= 2:
            coeffs[n] = exact[order] / factorial(n)
        else:
            coeffs[n] = float(_zeta_nonpositive(-order, bern) / factorial(n))
    return coeffs


_LOG_COEFFS = {s: _log_series_coefficients(s) for s in (2, 3)}
_HARMONIC = {2: 1.0, 3: 1.5}


def _taylor(s: int, z: np.ndarray) -> np.ndarray:
    n = np.arange(1, _N_TERMS + 1)
    powers = z[:, None] ** n[None, :]
    return powers @ (1.0 / n ** s)


def _log_expansion(s: int, z: np.ndarray) -> np.ndarray:
    mu = np.log(z)
    coeffs = _LOG_COEFFS[s]
    # Horner in mu over the regular part.
    acc = np.zeros_like(mu)
    for c in coeffs[::-1]:
        acc = acc * mu + c
    with np.errstate(divide="ignore", invalid="ignore"):
        singular = mu ** (s - 1) / factorial(s - 1) * (_HARMONIC[s] - np.log(-mu))
    singular = np.where(mu == 0, 0.0, singular)
    return acc + singular


def polylog(s: int, z):
    """Li_s(z) for s in {2, 3} and complex ``|z| <= 1``.

    Small arguments use the defining power series; for ``|z| > 1/2`` the
    expansion in ``log z`` around ``z = 1`` is used instead, which converges
    for ``|log z| < 2 pi`` and is uniform up to the unit circle.
    """
    if s not in (2, 3):
        raise ValueError(f"only orders 2 and 3 are supported, got {s}")
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    modulus = np.abs(z)
    if np.any(modulus > 1 + 1e-12):
        raise PolylogDomainError(f"polylog argument outside the unit disk: max |z| = "
                                 f"{modulus.max():.15g}", z=complex(z[np.argmax(modulus)]))
    out = np.empty_like(z)
    small = modulus <= _SWITCH_RADIUS
    if np.any(small):
        out[small] = _taylor(s, z[small])
    if np.any(~small):
        out[~small] = _log_expansion(s, z[~small])
    return out[0] if scalar else out


def branched_power_3_2(m: float, k):
    """(m^2 + k^2)^(3/2) with the cut of the logarithm on the negative real axis."""
    base = np.asarray(m * m + np.asarray(k, dtype=complex) ** 2, dtype=complex)
    on_cut = (base.real < 0) & (np.abs(base.imag) <= 1e-14 * np.abs(base))
    if np.any(on_cut):
        raise BranchCutError("argument of (m^2+k^2)^(3/2) lies on the branch cut",
                             m=m)
    with np.errstate(divide="ignore"):
        out = np.where(base == 0, 0.0, np.exp(1.5 * np.log(np.where(base == 0, 1.0, base))))
    return out[()] if out.ndim == 0 else out
