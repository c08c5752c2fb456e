import cmath
import math

import numpy as np
import pytest
import sympy as sp

from gdse import gbz
from gdse.errors import GBZToleranceError, InvalidInputError
from gdse.lattice import MAIN_PARAMS, HoppingParams, bloch_hamiltonian


def sympy_char_poly(p: HoppingParams, k_minus: float, E: complex) -> dict:
    """Coefficients of det(H - E) in beta = exp(i k_plus), from the Bloch form alone."""
    b = sp.symbols("b")
    bm = sp.sympify(cmath.exp(1j * k_minus))
    X, Y = b * bm, b / bm  # exp(i kx), exp(i ky)
    cx, sx = (X + 1 / X) / 2, (X - 1 / X) / (2 * sp.I)
    cy, sy = (Y + 1 / Y) / 2, (Y - 1 / Y) / (2 * sp.I)
    h0 = (p.t_p - p.t_s) * cx
    hx = -2 * p.t_sp_prime * sy * sx
    hy = 2 * p.t_sp * sx + 2 * p.t_sp_prime * cy * sx
    hz = -(p.t_p + p.t_s) * cx
    g = sp.I * p.gamma / 2
    a11 = h0 + hz - E
    a22 = h0 - hz - 2 * g - E
    det = sp.expand((a11 * a22 - (hx - sp.I * hy) * (hx + sp.I * hy)) * b**4)
    poly = sp.Poly(det, b)
    return {n - 4: complex(c) for (n,), c in poly.terms()}


@pytest.mark.parametrize("seed", range(4))
def test_char_poly_matches_symbolic_expansion(seed):
    rng = np.random.default_rng(seed)
    p = HoppingParams(*rng.uniform(-1.5, 1.5, 4), gamma=rng.uniform(0, 1))
    km = rng.uniform(-math.pi, math.pi)
    E = complex(*rng.normal(size=2))
    ref = sympy_char_poly(p, km, E)
    got = gbz.char_poly(p, km, E)
    for n in range(-4, 5):
        assert abs(got[n] - ref.get(n, 0)) < 1e-10, n
    hand = gbz.char_poly_expanded(p, km, E)
    for n in range(-4, 5):
        assert abs(hand[n] - ref.get(n, 0)) < 1e-10, n


def test_laurent_blocks_reproduce_bloch_on_unit_circle():
    rng = np.random.default_rng(3)
    for kp, km in rng.uniform(-math.pi, math.pi, (20, 2)):
        h = gbz.bloch_oblique(MAIN_PARAMS, cmath.exp(1j * kp), km)
        np.testing.assert_allclose(h, bloch_hamiltonian(MAIN_PARAMS, kp + km, kp - km), atol=1e-13)
        h = gbz.bloch_oblique(MAIN_PARAMS, cmath.exp(1j * kp), km, "minus")
        np.testing.assert_allclose(h, bloch_hamiltonian(MAIN_PARAMS, kp + km, km - kp), atol=1e-13)


def test_sorted_roots_order():
    poly = gbz.LaurentPoly({-1: 6.0, 0: -5.0, 1: 1.0})  # (b - 2)(b - 3) / b
    np.testing.assert_allclose(gbz.sorted_roots(poly), [2, 3])


def test_gbz_requires_no_rotation_term():
    with pytest.raises(InvalidInputError):
        gbz.laurent_blocks(MAIN_PARAMS.replace(delta_y=0.1), 0.0)


def test_hermitian_limit_is_on_the_unit_circle():
    sl = gbz.gbz_slice(MAIN_PARAMS.replace(gamma=0.0), 0.3, stripe_L=40)
    assert sl.acceptance > 0.9
    assert max(abs(p.kappa) for p in sl.points) < 1e-8


def test_lossy_slice_properties():
    sl = gbz.gbz_slice(MAIN_PARAMS, 0.3, stripe_L=60)
    assert sl.acceptance > 0.9
    assert gbz.spectrum_residuals(MAIN_PARAMS, sl).max() < 1e-8
    for p in sl.points:
        assert abs(abs(p.beta3) - abs(p.beta4)) < 1e-6 * abs(p.beta3)
        assert abs(gbz.char_poly(MAIN_PARAMS, 0.3, p.E)(p.beta3)) < 1e-8
    assert gbz.centroid_agreement(sl).mean() >= 0.95
    assert max(abs(p.kappa) for p in sl.points) > 0.05


def test_acceptance_floor_raises():
    with pytest.raises(GBZToleranceError):
        gbz.gbz_slice(MAIN_PARAMS, 0.3, stripe_L=20, min_acceptance=1.01)


def test_winding_field_matches_circle():
    trace = np.exp(2j * np.pi * np.arange(256) / 256)
    w = gbz.winding_field(trace, np.array([0.0, 0.5j, 2.0]))
    assert w.tolist() == [1, 1, 0]


def test_rotation_switches_to_line_skin_effect():
    rows = gbz.straight_direction_winding_scan(MAIN_PARAMS, fixed_momenta=(0.0, 0.1 * math.pi))
    phase = {r["delta_y"]: r["phase"] for r in rows}
    assert phase == {0.0: "GDSE", 0.1: "line-NHSE"}
    assert all(r["winding"] == 0 for r in rows if r["path"] == "ky")
