from __future__ import annotations

import ast
import math
from pathlib import Path

import numpy as np
import pytest

import combcasimir.oracle as oracle_module
from combcasimir import CombModel
from combcasimir.errors import GridTooCoarseError
from combcasimir.oracle import (OdeScatterSetup, TruncationWarning, band_sum_free_energy,
                                dense_scan_roots, kernel_by_quadrature, oracle_negative_band,
                                secular_h, transfer_matrix_amplitudes)
from combcasimir.scattering import amplitudes
from combcasimir.spectrum import dispersion
from combcasimir.thermal import delta_f, i3


def test_oracle_does_not_import_verified_modules():
    tree = ast.parse(Path(oracle_module.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.module:
            imported.add(node.module)
            imported.update(f"{node.module}.{a.name}" for a in node.names)
    for banned in ("spectrum", "vacuum", "thermal", "specialfn"):
        assert not any(banned in name for name in imported), banned
    # Only model containers are taken from the scattering module.
    names = {a.name for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)
             and node.module == "scattering" for a in node.names}
    assert names <= {"CombModel", "DeltaDeltaPrime", "PoschlTeller", "ScatteringAmplitudes"}


def test_ode_vanishing_support():
    amp = transfer_matrix_amplitudes(1e-3, 1.0)
    assert abs(amp.t - 1) < 1e-2
    assert abs(amp.r_R) < 1e-2


@pytest.mark.parametrize("eps, k", [(0.6, 1.0), (0.2, 0.5), (0.9, 5.0)])
def test_ode_matches_closed_form(eps, k):
    ode = transfer_matrix_amplitudes(eps, k)
    ref = amplitudes(CombModel.poschl_teller(eps, 1.0), k)
    assert abs(ode.t - ref.t) / abs(ref.t) < 1e-6
    assert abs(ode.r_R - ref.r_R) / abs(ref.r_R) < 1e-6


def test_ode_flux():
    amp = transfer_matrix_amplitudes(0.9, 5.0)
    assert abs(abs(amp.t) ** 2 + abs(amp.r_R) ** 2 - 1) < 1e-8


def test_ode_fourth_order():
    eps, k = 0.6, 2.0
    ref = amplitudes(CombModel.poschl_teller(eps, 1.0), k)
    coarse = OdeScatterSetup(eps, eps / 200)
    fine = OdeScatterSetup(eps, eps / 400)
    with pytest.raises(GridTooCoarseError):
        transfer_matrix_amplitudes(eps, 40.0, coarse)
    e_coarse = abs(transfer_matrix_amplitudes(eps, k, coarse).t - ref.t)
    e_fine = abs(transfer_matrix_amplitudes(eps, k, fine).t - ref.t)
    assert e_coarse / e_fine >= 8


def test_ode_setup_validation():
    with pytest.raises(ValueError):
        OdeScatterSetup(0.6, 0.01)
    with pytest.raises(ValueError):
        transfer_matrix_amplitudes(0.6, -1.0)


def test_dense_scan_trivial():
    th = math.pi / 3
    roots = dense_scan_roots(lambda k: math.cos(th) - np.cos(k), (0.0, 10.0), 1e-2)
    expected = [th, 2 * math.pi - th, 2 * math.pi + th]
    assert np.allclose(roots, expected, atol=1e-10)


def test_dense_scan_matches_dispersion():
    model = CombModel.dirac(10.0, 0.0, 1.0)
    roots = dense_scan_roots(lambda k: -np.real(secular_h(model, k)), (1e-3, 12.0), 1e-3)
    assert np.allclose(roots[:3], dispersion(model, math.pi / 2, 3), atol=1e-9)


def test_kernel_by_quadrature_matches_i3():
    for omega, T in [(0.0, 1.0), (0.3, 0.5), (2.0, 1.0), (5.0, 3.0)]:
        assert kernel_by_quadrature(omega, T) == pytest.approx(float(np.real(i3(omega, 0, T))),
                                                               rel=1e-11)


def test_oracle_negative_band():
    assert oracle_negative_band(CombModel.dirac(8.0, 0.0, 1.0)) is None
    band = oracle_negative_band(CombModel.poschl_teller(0.6, 1.0))
    assert band is not None and band.kappa_min > 0
    assert 0 < band.theta_c < math.pi


def test_band_sum_free_matches_contour():
    model = CombModel.free(1.0)
    assert band_sum_free_energy(model, 1.0) == pytest.approx(delta_f(model, 1.0), rel=1e-6)


def test_band_sum_ddp_cross_check():
    model = CombModel.dirac(8.0, 0.0, 1.0)
    assert band_sum_free_energy(model, 1.0) == pytest.approx(delta_f(model, 1.0), rel=1e-4)


def _bands_needed(T, tol=1e-12, a=1.0):
    # The n-th band sits near k = n pi / a; count bands with kernel above tol.
    n = 1
    while abs(kernel_by_quadrature(n * math.pi / a, T)) > tol:
        n += 1
    return n


def test_low_temperature_needs_fewer_bands():
    assert 10 * _bands_needed(0.1) <= _bands_needed(2.0)


def test_truncation_warning():
    with pytest.warns(TruncationWarning):
        band_sum_free_energy(CombModel.dirac(8.0, 0.0, 1.0), 2.0, n_bands=2, theta_nodes=8)
