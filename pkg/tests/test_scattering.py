from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from combcasimir import CombModel
from combcasimir.errors import GridTooCoarseError, PoleProximityError, TransparencyError
from combcasimir.oracle import transfer_matrix_amplitudes
from combcasimir.spectrum import h_v
from combcasimir.scattering import (amplitudes, derived_couplings, det_s, phase_shift,
                                    phase_shift_derivative)

K_GRID = np.linspace(1e-2, 50, 1000)


def _models():
    return [CombModel.dirac(2.0, 0.0, 1.0), CombModel.dirac(3.0, -2.0, 1.0),
            CombModel.dirac(-1.5, 0.4, 1.0), CombModel.poschl_teller(0.6, 1.0),
            CombModel.poschl_teller(0.98, 1.0)]


def test_ddp_example_amplitudes():
    amp = amplitudes(CombModel.dirac(2.0, 0.0, 1.0), 1.0)
    assert amp.t == pytest.approx((1 - 1j) / 2, abs=1e-15)
    assert abs(amp.t) ** 2 == pytest.approx(0.5, abs=1e-15)


def test_free_amplitudes():
    amp = amplitudes(CombModel.dirac(0.0, 0.0, 1.0), 2.7)
    assert amp.t == pytest.approx(1.0, abs=1e-15)
    assert amp.r_R == 0 and amp.r_L == 0


def test_ddp_reflection_closed_form():
    w0, w1, k = 3.0, -2.0, 1.7
    c = derived_couplings(CombModel.dirac(w0, w1, 1.0))
    root = np.sqrt(1 - c.omega ** 2)
    den = 1j * c.gamma + 2 * k
    amp = amplitudes(CombModel.dirac(w0, w1, 1.0), k)
    assert amp.t == pytest.approx(-2 * k * c.omega / den, abs=1e-14)
    assert amp.r_R == pytest.approx((-1j * c.gamma - 2 * k * root) / den, abs=1e-14)
    assert amp.r_L == pytest.approx((-1j * c.gamma + 2 * k * root) / den, abs=1e-14)


def test_derived_couplings():
    c = derived_couplings(CombModel.dirac(3.0, -2.0, 1.0))
    assert c.gamma == pytest.approx(0.6)
    assert c.omega == pytest.approx(0.6)
    lam = derived_couplings(CombModel.poschl_teller(0.6, 1.0)).lambda_pt
    assert lam == pytest.approx(1 - np.tanh(0.3) ** 2)
    assert 0 < lam <= 1


def test_pt_matches_ode():
    k = 1.0
    amp = amplitudes(CombModel.poschl_teller(0.6, 1.0), k)
    ode = transfer_matrix_amplitudes(0.6, k)
    assert abs(amp.t - ode.t) / abs(ode.t) < 1e-6
    assert abs(amp.r_R - ode.r_R) / abs(ode.r_R) < 1e-6


@pytest.mark.parametrize("model", _models(), ids=lambda m: str(m.describe()))
def test_unitarity_grid(model):
    amp = amplitudes(model, K_GRID)
    t2 = np.abs(amp.t) ** 2
    assert np.max(np.abs(t2 + np.abs(amp.r_R) ** 2 - 1)) < 1e-10
    assert np.max(np.abs(t2 + np.abs(amp.r_L) ** 2 - 1)) < 1e-10
    assert np.max(np.abs(np.abs(det_s(model, K_GRID)) - 1)) < 1e-10


def test_ddp_det_s_closed_form():
    k = np.linspace(0.1, 5, 30)
    for w0, w1 in [(2.0, 0.0), (3.0, -2.0), (-1.0, 0.5)]:
        g = w0 / (1 + w1 * w1)
        d = det_s(CombModel.dirac(w0, w1, 1.0), k)
        assert np.allclose(d, (2 * k - 1j * g) / (2 * k + 1j * g), atol=1e-14)


def test_free_det_s():
    assert np.allclose(det_s(CombModel.free(1.0), K_GRID), 1.0)


def test_pt_det_s_modulus():
    assert abs(abs(det_s(CombModel.poschl_teller(0.6, 1.0), 1.0)) - 1) < 1e-12


def test_pt_parity():
    amp = amplitudes(CombModel.poschl_teller(0.6, 1.0), K_GRID)
    assert np.array_equal(amp.r_R, amp.r_L)


def test_ddp_det_s_independent_of_w1():
    gamma = 1.3
    k = np.linspace(0.05, 20, 200)
    ref = det_s(CombModel.dirac(gamma, 0.0, 1.0), k)
    for w1 in (0.5, 5.0):
        d = det_s(CombModel.dirac(gamma * (1 + w1 * w1), w1, 1.0), k)
        assert np.max(np.abs(d - ref)) < 1e-12


@pytest.mark.parametrize("model", _models(), ids=lambda m: str(m.describe()))
def test_schwarz_reflection(model):
    k = np.array([0.3 + 0.2j, 1.5 + 0.7j, 4.0 + 0.1j, 2.0])
    t = amplitudes(model, k).t
    t_mirror = amplitudes(model, -np.conj(k)).t
    assert np.allclose(t_mirror, np.conj(t), atol=1e-13)


def test_phase_shift_ddp():
    k = np.linspace(0.05, 20, 400)
    delta = phase_shift(CombModel.dirac(2.0, 0.0, 1.0), k)
    assert np.max(np.abs(delta + np.arctan(1 / k))) < 1e-12


def test_phase_shift_free():
    assert np.all(phase_shift(CombModel.free(1.0), K_GRID) == 0)


def test_phase_shift_pt_vanishes_at_high_energy():
    k = np.geomspace(0.1, 1e3, 500)
    delta = phase_shift(CombModel.poschl_teller(0.6, 1.0), k)
    assert abs(delta[-1]) < 1e-3


def test_phase_shift_grid_too_coarse():
    with pytest.raises(GridTooCoarseError):
        phase_shift(CombModel.dirac(200.0, 0.0, 1.0), np.array([1.0, 500.0]))
    with pytest.raises(ValueError):
        phase_shift(CombModel.free(1.0), np.array([2.0, 1.0]))


def test_phase_shift_derivative_ddp():
    k = np.linspace(0.1, 10, 50)
    d = phase_shift_derivative(CombModel.dirac(2.0, 0.0, 1.0), k)
    assert np.allclose(d, 1.0 / (k * k + 1.0), atol=1e-14)
    assert np.all(phase_shift_derivative(CombModel.free(1.0), k) == 0)


def test_phase_shift_derivative_pt_fd():
    model = CombModel.poschl_teller(0.6, 1.0)
    h = 1e-4
    grid = np.array([2 - h, 2 + h])
    delta = phase_shift(model, grid)
    fd = (delta[1] - delta[0]) / (2 * h)
    assert abs(phase_shift_derivative(model, 2.0) - fd) < 1e-6


def test_errors():
    with pytest.raises(PoleProximityError):
        amplitudes(CombModel.dirac(2.0, 0.0, 1.0), -1j)
    with pytest.raises(PoleProximityError):
        amplitudes(CombModel.free(1.0), 0.0)
    with pytest.raises(ValueError):
        CombModel.poschl_teller(1.5, 1.0)
    with pytest.raises(ValueError):
        CombModel.dirac(1.0, 0.0, -1.0)
    opaque = CombModel.dirac(2.0, 1.0, 1.0)
    amp = amplitudes(opaque, 1.0)
    assert amp.t == 0 and abs(amp.r_R) == pytest.approx(1.0)
    with pytest.raises(TransparencyError):
        h_v(opaque, 1.0)


@settings(max_examples=80, deadline=None)
@given(st.floats(-10, 10), st.floats(-5, 5).filter(lambda w: abs(abs(w) - 1) > 1e-3),
       st.floats(1e-2, 50))
def test_unitarity_ddp_property(w0, w1, k):
    amp = amplitudes(CombModel.dirac(w0, w1, 1.0), k)
    assert abs(abs(amp.t) ** 2 + abs(amp.r_R) ** 2 - 1) < 1e-10
    assert abs(abs(amp.t) ** 2 + abs(amp.r_L) ** 2 - 1) < 1e-10


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(1e-2, 50))
def test_unitarity_pt_property(eps, k):
    model = CombModel.poschl_teller(eps, 1.0)
    amp = amplitudes(model, k)
    assert abs(abs(amp.t) ** 2 + abs(amp.r_R) ** 2 - 1) < 1e-10
    assert abs(abs(det_s(model, k)) - 1) < 1e-10
