import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdse.errors import InvalidGeometryError, InvalidInputError
from gdse.lattice import (
    MAIN_PARAMS,
    GeometryMask,
    GeometrySpec,
    HoppingParams,
    Momentum,
    bloch_grid,
    bloch_hamiltonian,
    boundary_shell,
    build_periodic,
    build_real_space,
    make_geometry,
    potential_diagonal,
    rectangle,
)

finite = st.floats(-2, 2, allow_nan=False)
params_st = st.builds(HoppingParams, finite, finite, finite, finite, st.floats(0, 2), st.floats(-1, 1))


def fourier_from_blocks(p, kx, ky):
    # independent route: sum the real-space blocks by hand
    Tx = np.array([[-p.t_s, -p.t_sp], [p.t_sp, p.t_p]], dtype=complex)
    Txy = np.array([[0, 0], [p.t_sp_prime, 0]], dtype=complex)
    h = np.diag([0, -1j * p.gamma]) + p.delta_y * np.array([[0, -1j], [1j, 0]])
    for (dx, dy), T in (((1, 0), Tx), ((1, 1), Txy), ((-1, 1), -Txy)):
        h = h + T * cmath.exp(1j * (kx * dx + ky * dy)) + T.conj().T * cmath.exp(-1j * (kx * dx + ky * dy))
    return h


def test_bloch_at_gamma_point():
    p = HoppingParams(0.7, 1.3, 0.4, 0.2, gamma=0.6)
    h = bloch_hamiltonian(p, 0.0, 0.0)
    np.testing.assert_allclose(h, np.diag([-1.4, 2.6 - 0.6j]), atol=1e-15)


def test_bloch_eigenvalues_at_half_pi():
    # h = (0, 0, 3, 0): lambda^2 + i gamma lambda - 9 = 0
    e = np.sort_complex(np.linalg.eigvals(bloch_hamiltonian(MAIN_PARAMS, math.pi / 2, 0.0)))
    root = math.sqrt(36 - 0.25) / 2
    np.testing.assert_allclose(e, [-root - 0.25j, root - 0.25j], atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(params_st, st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_bloch_matches_block_fourier_sum(p, kx, ky):
    np.testing.assert_allclose(bloch_hamiltonian(p, kx, ky), fourier_from_blocks(p, kx, ky), atol=1e-12)
    np.testing.assert_allclose(bloch_grid(p, kx, ky), fourier_from_blocks(p, kx, ky), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(params_st)
def test_periodic_spectrum_is_bloch_spectrum(p):
    from gdse.checks import multiset_distance

    L = 5
    k = 2 * math.pi * np.arange(L) / L
    eb = np.array([np.linalg.eigvals(fourier_from_blocks(p, a, b)) for a in k for b in k]).ravel()
    ev = np.linalg.eigvals(build_periodic(p, L).toarray())
    assert multiset_distance(ev, eb) < 1e-9


@settings(max_examples=20, deadline=None)
@given(params_st)
def test_hermitian_without_loss(p):
    H = build_real_space(p.replace(gamma=0.0), make_geometry(GeometrySpec("rotated", 7, 0.3)))
    assert abs(H - H.conj().T).max() < 1e-14


def test_lossy_block_is_only_antihermitian_part():
    mask = make_geometry(GeometrySpec("square", 4))
    H = build_real_space(MAIN_PARAMS, mask).toarray()
    A = (H - H.conj().T) / 2j
    np.testing.assert_allclose(A, np.diag(np.tile([0, -0.5], len(mask))), atol=1e-15)


def test_real_space_block_placement():
    p = HoppingParams(1.1, 0.9, 0.3, 0.2, gamma=0.0)
    mask = rectangle(2, 2)
    H = build_real_space(p, mask).toarray()
    i, j = mask.index_of[(0, 0)], mask.index_of[(1, 0)]
    np.testing.assert_allclose(H[2 * i:2 * i + 2, 2 * j:2 * j + 2], [[-1.1, -0.3], [0.3, 0.9]])
    j = mask.index_of[(1, 1)]
    np.testing.assert_allclose(H[2 * i:2 * i + 2, 2 * j:2 * j + 2], [[0, 0], [0.2, 0]])


@pytest.mark.parametrize("L, n", [(21, 221), (31, 481), (39, 761), (57, 1625)])
def test_diamond_cell_counts(L, n):
    # centred squares of a diamond: 2m^2 + 2m + 1 cells for L = 2m + 1
    m = (L - 1) // 2
    assert n == 2 * m * m + 2 * m + 1
    assert len(make_geometry(GeometrySpec("diamond", L))) == n


def test_square_geometry_and_shell():
    mask = make_geometry(GeometrySpec("square", 10))
    assert len(mask) == 100
    assert len(boundary_shell(mask, 1)) == 36
    assert len(boundary_shell(mask, 2)) == 36 + 28


def test_rotation_is_of_the_boundary_only():
    mask = make_geometry(GeometrySpec("rotated", 20, math.pi / 8))
    c = mask.coords
    assert np.allclose(c, np.round(c))
    assert mask.is_connected()


def test_geometry_validation():
    with pytest.raises(InvalidGeometryError):
        GeometrySpec("square", 10, 0.2)
    with pytest.raises(InvalidGeometryError):
        GeometrySpec("hexagon", 10)
    with pytest.raises(InvalidGeometryError):
        GeometrySpec("rotated", 10, 1.0)
    with pytest.raises(InvalidGeometryError):
        GeometrySpec("square", 2)
    with pytest.raises(InvalidInputError):
        HoppingParams(gamma=-0.1)
    with pytest.raises(InvalidInputError):
        HoppingParams(t_s=float("nan"))


def test_disconnected_mask_detected():
    assert not GeometryMask.from_cells([(0, 0), (2, 0)]).is_connected()


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_momentum_wrapping(kx, ky):
    k = Momentum(kx, ky)
    assert -math.pi <= k.kx < math.pi and -math.pi <= k.ky < math.pi
    assert cmath.isclose(cmath.exp(1j * k.kx), cmath.exp(1j * kx), abs_tol=1e-9)


def test_oblique_round_trip():
    k = Momentum.from_oblique(0.4, -0.3)
    assert math.isclose(k.k_plus, 0.4) and math.isclose(k.k_minus, -0.3)


def test_potential_diagonal_is_linear_in_position():
    mask = rectangle(3, 2)
    v = potential_diagonal(mask, (0.5, -1.0), origin=(0, 0))
    expected = np.repeat([0.5 * x - y for x, y in mask.cells], 2)
    np.testing.assert_allclose(v, expected)
