"""Tight-binding couplings of the double-well optical lattice from harmonic-oscillator orbitals.

Units: lattice wavevector k = 1 (so the period is pi), recoil energy
E_r = 1, hbar = 1 and m = 1/2, which makes the kinetic term -nabla^2.
The potential is separable, V(x, y) = Vx(x) + Vy(y), and every orbital is
a product f(x) g(y), so all 2D tensor-grid integrals factor into 1D ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import eval_hermite, factorial

from .errors import (
    DivergenceRiskError,
    InvalidInputError,
    NotDoubleWellError,
    ResolutionError,
    SaddlePointError,
)
from .lattice import HoppingParams

PERIOD = math.pi  # lattice constant for k = 1


@dataclass(frozen=True)
class OpticalPotentialSpec:
    Vx: float
    V1: float
    V2: float
    phi: float

    def __post_init__(self):
        if min(self.V1, self.V2) < 0:
            raise InvalidInputError("V1 and V2 must be >= 0")

    def vx(self, x):
        return self.Vx * np.sin(x) ** 2

    def vy(self, y):
        return self.V1 * np.sin(y) ** 2 + self.V2 * np.sin(2 * y + self.phi / 2) ** 2

    def __call__(self, x, y):
        return self.vx(x) + self.vy(y)

    def curvature_y(self, y):
        return 2 * self.V1 * np.cos(2 * y) + 8 * self.V2 * np.cos(4 * y + self.phi)

    def curvature_x(self, x):
        return 2 * self.Vx * np.cos(2 * x)


# Rows of the published table: (phi, Vx) at V1 = 10, V2 = 13.
TABLE_ROWS = (
    (OpticalPotentialSpec(0.8, 10, 13, 0.8 * math.pi), (-0.2, 0.64, 0.16, 0.04)),
    (OpticalPotentialSpec(1.2, 10, 13, 0.8 * math.pi), (-0.18, 0.62, 0.13, 0.03)),
    (OpticalPotentialSpec(1.0, 10, 13, 0.85 * math.pi), (-0.19, 0.63, 0.14, 0.03)),
)


@dataclass(frozen=True)
class Minima:
    x: np.ndarray  # x-minima inside the window
    y_wells: tuple  # inequivalent y-minima in [0, pi), deepest last
    depths: tuple  # Vy at each y well


def find_minima(pot: OpticalPotentialSpec, window: float = 3 * PERIOD, require_double: bool = True) -> Minima:
    """x-minima at n pi and the inequivalent y-minima of one period, polished to 1e-10."""
    n = int(math.floor(window / PERIOD))
    xs = PERIOD * np.arange(-n, n + 1)
    y = np.linspace(0.0, PERIOD, 4096, endpoint=False)
    v = pot.vy(y)
    found = []
    for i in range(len(y)):
        if v[i] < v[i - 1] and v[i] <= v[(i + 1) % len(y)]:
            lo, hi = y[i] - y[1], y[i] + y[1]
            r = minimize_scalar(pot.vy, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            found.append(float(r.x) % PERIOD)
    found = sorted(set(round(f, 12) for f in found))
    if require_double and len(found) < 2:
        raise NotDoubleWellError(f"found {len(found)} inequivalent y-minima")
    depths = [float(pot.vy(f)) for f in found]
    order = np.argsort(depths)[::-1]
    return Minima(xs, tuple(found[i] for i in order), tuple(depths[i] for i in order))


def harmonic_freqs(pot: OpticalPotentialSpec, minimum) -> tuple:
    """(omega_x, omega_y) from the curvature: m omega^2 = V'' with m = 1/2."""
    x0, y0 = minimum
    cx, cy = float(pot.curvature_x(x0)), float(pot.curvature_y(y0))
    if cx <= 0 or cy <= 0:
        raise SaddlePointError(f"curvatures ({cx:.3g}, {cy:.3g}) at {minimum} are not both positive")
    return math.sqrt(2 * cx), math.sqrt(2 * cy)


def ho_function(z, omega: float, l: int):
    """Normalized 1D oscillator state exp(-omega z^2/4) H_l(sqrt(omega/2) z)."""
    xi = np.sqrt(omega / 2) * z
    norm = (omega / (2 * math.pi)) ** 0.25 / math.sqrt(2.0**l * factorial(l))
    return norm * np.exp(-(xi**2) / 2) * eval_hermite(l, xi)


def ho_kinetic(z, omega: float, l: int):
    """-f'' of ho_function, from the oscillator equation."""
    return (omega * (l + 0.5) - omega**2 * z**2 / 4) * ho_function(z, omega, l)


@dataclass(frozen=True)
class Orbital:
    center: tuple
    lx: int
    ly: int
    wx: float
    wy: float
    label: tuple = ()  # (cell, name)


@dataclass(frozen=True)
class WannierBasis:
    """Orthogonalized functions as combinations of primitive orbitals.

    Column j of ``coeffs`` expands function j over the primitives, whose
    mutual overlaps are ``overlap``.
    """

    orbitals: tuple
    overlap: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @property
    def gram(self) -> np.ndarray:
        return self.coeffs.T @ self.overlap @ self.coeffs

    @property
    def residual(self) -> float:
        return float(np.abs(self.gram - np.eye(len(self.coeffs))).max())


def orthogonalize(basis: WannierBasis, iterations: int = 6) -> WannierBasis:
    """Half-subtraction update phi -> phi - 1/2 sum eps phi', then renormalize.

    Each sweep squares the residual overlap.
    """
    C = basis.coeffs
    S = basis.overlap
    eps = C.T @ S @ C - np.eye(len(C))
    np.fill_diagonal(eps, 0.0)
    if np.abs(eps).max() >= 0.5:
        raise DivergenceRiskError(f"initial overlap {np.abs(eps).max():.3g} >= 0.5")
    for _ in range(iterations):
        g = C.T @ S @ C
        eps = g - np.eye(len(C))
        C = C @ (np.eye(len(C)) - 0.5 * eps)
        C = C / np.sqrt(np.diag(C.T @ S @ C))
    return WannierBasis(basis.orbitals, S, C)


class _Grid:
    """1D tensor grids and the primitive integrals built on them."""

    def __init__(self, orbitals, vx, vy, spacing: float, margin: float = 3 * PERIOD):
        cx = np.array([o.center[0] for o in orbitals])
        cy = np.array([o.center[1] for o in orbitals])
        self.x = np.arange(cx.min() - margin, cx.max() + margin + spacing, spacing)
        self.y = np.arange(cy.min() - margin, cy.max() + margin + spacing, spacing)
        h = spacing
        fx = np.array([ho_function(self.x - o.center[0], o.wx, o.lx) for o in orbitals])
        fy = np.array([ho_function(self.y - o.center[1], o.wy, o.ly) for o in orbitals])
        hx = np.array([ho_kinetic(self.x - o.center[0], o.wx, o.lx) for o in orbitals]) + fx * vx(self.x)
        hy = np.array([ho_kinetic(self.y - o.center[1], o.wy, o.ly) for o in orbitals]) + fy * vy(self.y)
        sx, sy = fx @ fx.T * h, fy @ fy.T * h
        self.overlap = sx * sy
        H = (fx @ hx.T * h) * sy + sx * (fy @ hy.T * h)
        self.hamiltonian = 0.5 * (H + H.T)


def _primitive_basis(orbitals, vx, vy, spacing: float):
    g = _Grid(orbitals, vx, vy, spacing)
    return WannierBasis(tuple(orbitals), g.overlap, np.eye(len(orbitals))), g.hamiltonian


def matrix_elements(basis: WannierBasis, hamiltonian: np.ndarray) -> np.ndarray:
    return basis.coeffs.T @ hamiltonian @ basis.coeffs


@dataclass(frozen=True)
class LatticeOrbitals:
    s_well: float  # y of the s well inside the home cell
    p_well: float
    omegas: dict  # name -> (wx, wy)
    orbitals: tuple


def ladder_orbitals(pot: OpticalPotentialSpec, n_window: int = 3) -> LatticeOrbitals:
    """s on the shallower well and p_x on the deeper one, over a square window of cells.

    The extra x-quantum of p_x is what lets the deeper well's p level meet
    the shallower well's s level.  The p well of the home cell is taken
    just below the s well, so the intra-row s-p bond is the one between
    the closer wells; the other bond then runs diagonally.
    """
    m = find_minima(pot)
    ys, yp = m.y_wells[0], m.y_wells[-1]  # shallowest, deepest
    yp = ys - ((ys - yp) % PERIOD)
    ws = harmonic_freqs(pot, (0.0, ys))
    wp = harmonic_freqs(pot, (0.0, yp))
    orbs = []
    for j in range(-n_window, n_window + 1):
        for i in range(-n_window, n_window + 1):
            orbs.append(Orbital((i * PERIOD, j * PERIOD + ys), 0, 0, *ws, label=((i, j), "s")))
            orbs.append(Orbital((i * PERIOD, j * PERIOD + yp), 1, 0, *wp, label=((i, j), "p")))
    return LatticeOrbitals(ys, yp, {"s": ws, "p": wp}, tuple(orbs))


@dataclass(frozen=True)
class TightBindingFit:
    params: HoppingParams
    couplings: dict  # raw integrals between home-cell orbitals and neighbours
    overlap_residual: float
    resolution_change: float


def hopping_integral(basis: WannierBasis, hamiltonian: np.ndarray, displacement) -> np.ndarray:
    """2x2 block [[ss, sp], [ps, pp]] between the home cell and the cell at ``displacement``."""
    index = {o.label: i for i, o in enumerate(basis.orbitals)}
    T = matrix_elements(basis, hamiltonian)
    d = tuple(displacement)
    out = np.empty((2, 2))
    for a, na in enumerate("sp"):
        for b, nb in enumerate("sp"):
            out[a, b] = T[index[((0, 0), na)], index[(d, nb)]]
    return out


def _couplings(pot, n_window, iterations, spacing):
    lo = ladder_orbitals(pot, n_window)
    prim, H = _primitive_basis(lo.orbitals, pot.vx, pot.vy, spacing)
    basis = orthogonalize(prim, iterations)
    blocks = {d: hopping_integral(basis, H, d) for d in ((0, 0), (1, 0), (-1, 0), (1, 1), (-1, 1), (0, 1))}
    raw = {
        "e_s": blocks[(0, 0)][0, 0],
        "e_p": blocks[(0, 0)][1, 1],
        "ss_x": blocks[(1, 0)][0, 0],
        "pp_x": blocks[(1, 0)][1, 1],
        "sp_x": blocks[(1, 0)][0, 1],
        "sp_minus_x": blocks[(-1, 0)][0, 1],
        "sp_xy": blocks[(1, 1)][0, 1],
        "sp_minus_xy": blocks[(-1, 1)][0, 1],
        "ps_xy": blocks[(1, 1)][1, 0],
        "ss_y": blocks[(0, 1)][0, 0],
        "pp_y": blocks[(0, 1)][1, 1],
    }
    return {k: float(v) for k, v in raw.items()}, basis.residual


def fit_tight_binding(
    pot: OpticalPotentialSpec,
    gamma: float = 0.0,
    n_window: int = 3,
    iterations: int = 6,
    spacing: float = 2 * math.pi / 128,
    check_resolution: bool = True,
) -> TightBindingFit:
    """Couplings (t_s, t_p, t_sp, t'_sp) as the signed raw integrals.

    t_s and t_p are the s-s and p-p integrals one period along x, t_sp the
    s-p integral toward +x and t'_sp the diagonal s-p integral.  Longer
    range terms are computed (see ``couplings``) but not carried over.
    """
    if spacing > 2 * math.pi / 64:
        raise ResolutionError("grid spacing must not exceed lambda/64")
    raw, residual = _couplings(pot, n_window, iterations, spacing)
    change = 0.0
    if check_resolution:
        fine, _ = _couplings(pot, n_window, iterations, spacing / 2)
        keys = ("ss_x", "pp_x", "sp_x", "sp_xy")
        change = max(abs(fine[k] - raw[k]) for k in keys)
        if change > 1e-3:
            raise ResolutionError(f"couplings move by {change:.2g} when the grid is refined")
    params = HoppingParams(
        t_s=raw["ss_x"],
        t_p=raw["pp_x"],
        t_sp=raw["sp_x"],
        t_sp_prime=raw["sp_xy"],
        gamma=gamma,
    )
    return TightBindingFit(params, raw, residual, change)
