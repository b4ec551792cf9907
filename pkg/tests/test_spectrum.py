from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from combcasimir import CombModel
from combcasimir.numerics import RootBracket, find_root
from combcasimir.oracle import dense_scan_roots, oracle_negative_band, secular_h
from combcasimir.spectrum import (band_edges, band_structure, dispersion, h_v, h_v_derivative,
                                  mass, negative_band, secular, ScanResolutionWarning)


def _periodic_ground_state(eps: float, a: float, n: int = 4000) -> float:
    """Lowest eigenvalue of -d^2/dz^2 + V_PT on a periodic cell (finite differences)."""
    z = (np.arange(n) + 0.5) * a / n - a / 2
    h = a / n
    v = np.where(np.abs(z) < eps / 2, -2 / np.cosh(z) ** 2, 0.0)
    diag = 2 / h ** 2 + v
    off = -np.ones(n - 1) / h ** 2
    # Periodic wrap handled by a dense correction on the corner entries.
    mat = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    mat[0, -1] = mat[-1, 0] = -1 / h ** 2
    return float(np.linalg.eigvalsh(mat)[0])


def test_h_v_free():
    k = np.linspace(0.1, 10, 50)
    assert np.allclose(h_v(CombModel.free(1.3), k), np.cos(1.3 * k), atol=1e-13)


def test_h_v_ddp_reduction():
    k = np.linspace(0.1, 10, 50)
    g = 4.0
    assert np.allclose(h_v(CombModel.dirac(g, 0.0, 1.0), k),
                       np.cos(k) + g / 2 * np.sin(k) / k, atol=1e-13)


def test_h_v_pt_imaginary_axis(pt06):
    kappa = np.linspace(0.01, 2.0, 100)
    h = h_v(pt06, 1j * kappa)
    assert np.max(np.abs(h.imag)) < 1e-10
    k_min = negative_band(pt06).kappa_min
    assert h_v(pt06, 1j * k_min).real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("model", [CombModel.poschl_teller(0.6, 1.0),
                                   CombModel.poschl_teller(0.98, 1.7),
                                   CombModel.dirac(3.0, -2.0, 1.0),
                                   CombModel.dirac(-2.0, 0.3, 0.8)],
                         ids=lambda m: str(m.describe()))
def test_h_v_matches_closed_secular_form(model):
    k = np.concatenate([np.linspace(0.0, 12, 97), 1j * np.linspace(0.05, 2.95, 30),
                        np.linspace(0.1, 6, 20) * np.exp(0.4j)])
    assert np.allclose(h_v(model, k), secular_h(model, k), rtol=1e-10, atol=1e-11)


def test_h_v_derivative_fd(pt06):
    k = np.array([0.3, 1.7 + 0.4j, 0.05j, 0.0])
    step = 1e-6
    fd = (h_v(pt06, k + step) - h_v(pt06, k - step)) / (2 * step)
    assert np.allclose(h_v_derivative(pt06, k), fd, atol=1e-8)


def test_secular_evaluation(ddp10):
    ev = secular(ddp10, math.pi / 3, 2.0)
    assert ev.f == pytest.approx(0.5 - ev.h)


def test_band_edges_free():
    assert band_edges(CombModel.free(1.0), 100.0) == [(0.0, pytest.approx(10.0))]


def test_band_edges_ddp_match_bisection(ddp10):
    edges = band_edges(ddp10, 150.0)
    g = lambda k: np.cos(k) + 5 * np.sin(k) / k  # noqa: E731
    ref = []
    for level in (1.0, -1.0):
        ref.extend(dense_scan_roots(lambda k: g(k) - level, (1e-3, math.sqrt(150.0)), 1e-3))
    # The top of the scan window closes the last interval without being an edge.
    flat = sorted(x for pair in edges for x in pair if x < math.sqrt(150.0) - 1e-12)
    assert len(flat) == len(ref)
    assert np.max(np.abs(np.array(flat) - np.array(sorted(ref)))) < 1e-8


def test_band_edges_pt_gap(pt06):
    edges = band_edges(pt06, 60.0)
    assert len(edges) >= 2
    assert edges[1][0] - edges[0][1] > 1e-3
    mid = 0.5 * (edges[0][1] + edges[1][0])
    assert abs(h_v(pt06, mid)) > 1


def test_dispersion_free():
    for th in (0.3, 1.2, 2.9):
        roots = dispersion(CombModel.free(2.0), th, 4)
        expected = sorted([th / 2, (2 * math.pi - th) / 2, (2 * math.pi + th) / 2,
                           (4 * math.pi - th) / 2])
        assert np.allclose(roots, expected, atol=1e-11)


def test_dispersion_ddp(ddp10):
    roots = dispersion(ddp10, math.pi / 2, 4)
    ref = dense_scan_roots(lambda k: np.cos(k) + 5 * np.sin(k) / k, (1e-3, roots[-1] + 0.1),
                           1e-3)
    assert np.allclose(roots, ref[:4], atol=1e-9)


def test_dispersion_pt_closed_form(pt06):
    roots = dispersion(pt06, math.pi / 2, 3)
    ref = dense_scan_roots(lambda k: -np.real(secular_h(pt06, k)), (1e-3, roots[-1] + 0.1),
                           1e-3)
    assert np.allclose(roots, ref[:3], atol=1e-9)


def test_dispersion_errors(ddp10):
    with pytest.raises(ValueError):
        dispersion(ddp10, 4.0, 2)
    with pytest.raises(ValueError):
        dispersion(ddp10, 1.0, 0)


def test_negative_band_absent():
    assert negative_band(CombModel.dirac(8.0, 0.0, 1.0)) is None
    assert negative_band(CombModel.dirac(0.1, -5.0, 1.0)) is None
    assert negative_band(CombModel.free(1.0)) is None


def test_negative_band_pt(pt06):
    band = negative_band(pt06)
    assert band is not None
    oracle = oracle_negative_band(pt06)
    assert band.kappa_min == pytest.approx(oracle.kappa_min, abs=1e-9)
    assert band.theta_c == pytest.approx(oracle.theta_c, abs=1e-9)
    assert band.theta_c == pytest.approx(math.acos(h_v(pt06, 0j).real), abs=1e-12)


def test_negative_band_matches_periodic_eigenproblem(pt06):
    # theta = 0 is the periodic problem; its ground state is -kappa_min^2.
    e0 = _periodic_ground_state(0.6, 1.0)
    assert -negative_band(pt06).kappa_min ** 2 == pytest.approx(e0, rel=1e-4)


def test_negative_band_ddp_attractive():
    model = CombModel.dirac(-3.0, 0.0, 1.0)
    band = negative_band(model)
    assert band is not None
    assert band.kappa(0.0) == pytest.approx(band.kappa_min, abs=1e-10)
    assert band.kappa(band.theta_c) == pytest.approx(0.0, abs=1e-6)


def test_kappa_endpoints_and_monotone(pt06):
    band = negative_band(pt06)
    assert band.kappa(0.0) == pytest.approx(band.kappa_min, abs=1e-10)
    assert band.kappa(band.theta_c) == pytest.approx(0.0, abs=1e-6)
    th = np.linspace(0, band.theta_c, 40)
    kap = band.kappas(th)
    assert np.all(np.diff(kap) < 0)
    assert np.allclose(kap, [band.kappa(t) for t in th], atol=1e-7)
    assert np.allclose(h_v(pt06, 1j * kap).real, np.cos(th), atol=1e-12)
    with pytest.raises(ValueError):
        band.kappa(band.theta_c + 0.1)


def test_mass_examples(pt06):
    assert mass(CombModel.dirac(8.0, 0.0, 1.0)) == 0.0
    assert mass(CombModel.free(1.0)) == 0.0
    assert mass(pt06) == negative_band(pt06).kappa_min


def test_band_structure_pt(pt06):
    bs = band_structure(pt06, n_bands=3)
    assert len(bs.bands) == 3
    assert bs.mass == negative_band(pt06).kappa_min
    first = bs.bands[0]
    below = first.energy < 0
    assert np.any(below)
    assert np.all(first.theta[below] <= bs.negative_band.theta_c + 1e-12)
    for lower, upper in zip(bs.bands[:-1], bs.bands[1:]):
        assert np.all(lower.energy <= upper.energy)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 30), st.sampled_from(["pt", "ddp"]), st.floats(0.05, 1.0),
       st.floats(-10, 10))
def test_h_v_real_on_real_axis(k, kind, eps, w0):
    model = CombModel.poschl_teller(eps, 1.0) if kind == "pt" else CombModel.dirac(w0, 0.3, 1.0)
    assert abs(np.imag(h_v(model, k))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.floats(-3, 3).filter(lambda w: abs(abs(w) - 1) > 0.05),
       st.floats(0.05, 3.1))
def test_ddp_roots_match_paper_form(w0, w1, theta):
    model = CombModel.dirac(w0, w1, 1.0)
    g = w0 / (1 + w1 * w1)
    om = (w1 * w1 - 1) / (w1 * w1 + 1)
    paper = lambda k: om * math.cos(theta) + math.cos(k) + g / 2 * math.sin(k) / k  # noqa: E731
    for root in dispersion(model, theta, 3):
        step = 1e-6 * max(1.0, root)
        lo, hi = root - step, root + step
        if np.sign(paper(lo)) == np.sign(paper(hi)):
            continue  # tangent root at a band edge
        ref = find_root(paper, RootBracket(lo, hi), tol=1e-14)
        assert abs(root - ref) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, math.pi), st.sampled_from([0.25, 0.6, 0.98]))
def test_dispersion_even_and_one_root_per_band(theta, eps):
    model = CombModel.poschl_teller(eps, 1.0)
    roots = dispersion(model, theta, 3)
    assert np.allclose(roots, dispersion(model, -theta, 3), atol=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScanResolutionWarning)
        edges = band_edges(model, (roots[-1] + 0.5) ** 2)
    counts = [sum(lo - 1e-9 <= r <= hi + 1e-9 for r in roots) for lo, hi in edges]
    assert all(c <= 1 for c in counts)
    # A band starting at k = 0 holds its state at imaginary k for theta < theta_c.
    assert all(c == 1 for (lo, _), c in zip(edges[:-1], counts[:-1]) if lo > 0)
    assert np.all(np.abs(h_v(model, roots).real) <= 1 + 1e-12)
