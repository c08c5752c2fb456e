import math

import numpy as np
import pytest

from gdse.errors import DivergenceRiskError, NotDoubleWellError, ResolutionError, SaddlePointError
from gdse.wannier import (
    PERIOD,
    TABLE_ROWS,
    OpticalPotentialSpec,
    WannierBasis,
    find_minima,
    fit_tight_binding,
    harmonic_freqs,
    ho_function,
    ho_kinetic,
    ladder_orbitals,
    orthogonalize,
)

POT = TABLE_ROWS[0][0]
z = np.linspace(-12, 12, 24001)
h = z[1] - z[0]


@pytest.mark.parametrize("omega", [1.3, 4.0])
def test_oscillator_functions_orthonormal(omega):
    f = np.array([ho_function(z, omega, l) for l in range(4)])
    np.testing.assert_allclose(f @ f.T * h, np.eye(4), atol=1e-10)


@pytest.mark.parametrize("l", [0, 1, 2])
def test_oscillator_kinetic_is_minus_second_derivative(l):
    f = ho_function(z, 2.5, l)
    d2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    np.testing.assert_allclose(ho_kinetic(z, 2.5, l)[1:-1], -d2, atol=1e-5)


def test_curvatures_match_finite_differences():
    y = np.linspace(0, PERIOD, 50)
    e = 1e-4
    fd = (POT.vy(y + e) - 2 * POT.vy(y) + POT.vy(y - e)) / e**2
    np.testing.assert_allclose(POT.curvature_y(y), fd, atol=1e-4)
    assert harmonic_freqs(POT, (0.0, find_minima(POT).y_wells[0]))[0] == pytest.approx(math.sqrt(4 * 0.8))


def test_minima_against_dense_scan():
    y = np.linspace(0, PERIOD, 200001, endpoint=False)
    v = POT.vy(y)
    is_min = (v < np.roll(v, 1)) & (v < np.roll(v, -1))
    brute = np.sort(y[is_min])
    m = find_minima(POT)
    np.testing.assert_allclose(np.sort(m.y_wells), brute, atol=2e-5)
    assert m.depths[0] > m.depths[-1]
    np.testing.assert_allclose(m.x, PERIOD * np.arange(-3, 4))


def test_single_well_rejected():
    pot = OpticalPotentialSpec(0.8, 10, 0, 0.0)
    with pytest.raises(NotDoubleWellError):
        find_minima(pot)
    assert len(find_minima(pot, require_double=False).y_wells) == 1


def test_saddle_point_rejected():
    with pytest.raises(SaddlePointError):
        harmonic_freqs(POT, (PERIOD / 2, find_minima(POT).y_wells[0]))


def test_p_well_sits_below_s_well():
    lo = ladder_orbitals(POT)
    assert lo.s_well - PERIOD < lo.p_well < lo.s_well
    assert len(lo.orbitals) == 2 * 7 * 7


def test_orthogonalization_converges_quadratically():
    rng = np.random.default_rng(2)
    A = np.eye(6) + 0.05 * rng.normal(size=(6, 6))
    S = A.T @ A
    S = S / np.sqrt(np.outer(np.diag(S), np.diag(S)))
    b = WannierBasis(tuple(range(6)), S, np.eye(6))
    r = [orthogonalize(b, n).residual for n in (1, 2, 3, 5)]
    assert r[1] < 10 * r[0] ** 2 and r[2] < 10 * r[1] ** 2
    assert r[3] < 1e-13
    with pytest.raises(DivergenceRiskError):
        orthogonalize(WannierBasis((0, 1), np.array([[1, 0.6], [0.6, 1]]), np.eye(2)))


def test_table_row_regression():
    # frozen from a converged run (window 3, six sweeps, lambda/128 grid)
    fit = fit_tight_binding(POT)
    p = fit.params
    np.testing.assert_allclose((p.t_s, p.t_p, p.t_sp, p.t_sp_prime), (-0.1951, 0.5371, 0.1788, 0.0295), atol=2e-4)
    assert fit.overlap_residual < 1e-10
    assert fit.resolution_change < 1e-3


def test_coarse_grid_refused():
    with pytest.raises(ResolutionError):
        fit_tight_binding(POT, spacing=2 * math.pi / 32)
