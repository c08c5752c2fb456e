"""Geometries and Hamiltonians of the lossy two-orbital (s, p_x) ladder lattice.

Conventions: lattice constant 1, hbar 1.  Orbital order inside every unit
cell is (s, p_x), so cell ``i`` owns matrix rows ``2*i`` and ``2*i + 1``.
A term ``c_r^dag T c_{r+d}`` puts ``T`` in the block (r, r+d); its Bloch
image is ``T exp(i k.d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sps

from .errors import InvalidGeometryError, InvalidInputError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def wrap_angle(k: float) -> float:
    """Map an angle into [-pi, pi)."""
    return (k + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class HoppingParams:
    t_s: float = 1.0
    t_p: float = 1.0
    t_sp: float = 1.0
    t_sp_prime: float = 0.5
    gamma: float = 0.5
    delta_y: float = 0.0

    def __post_init__(self):
        values = (self.t_s, self.t_p, self.t_sp, self.t_sp_prime, self.gamma, self.delta_y)
        if not all(math.isfinite(v) for v in values):
            raise InvalidInputError("hopping parameters must be finite")
        if self.gamma < 0:
            raise InvalidInputError(f"loss rate gamma must be >= 0, got {self.gamma}")

    def replace(self, **changes) -> "HoppingParams":
        data = self.as_dict()
        data.update(changes)
        return HoppingParams(**data)

    def as_dict(self) -> dict:
        return {
            "t_s": self.t_s,
            "t_p": self.t_p,
            "t_sp": self.t_sp,
            "t_sp_prime": self.t_sp_prime,
            "gamma": self.gamma,
            "delta_y": self.delta_y,
        }

    @property
    def onsite(self) -> np.ndarray:
        return np.diag([0.0, -1j * self.gamma]) + self.delta_y * SIGMA_Y

    @property
    def hop_x(self) -> np.ndarray:
        return np.array([[-self.t_s, -self.t_sp], [self.t_sp, self.t_p]], dtype=complex)

    @property
    def hop_xy(self) -> np.ndarray:
        return np.array([[0, 0], [self.t_sp_prime, 0]], dtype=complex)


# Parameters of the main-text figures.
MAIN_PARAMS = HoppingParams()


@dataclass(frozen=True)
class Momentum:
    """Crystal momentum; components are wrapped into [-pi, pi)."""

    kx: float
    ky: float

    def __post_init__(self):
        object.__setattr__(self, "kx", wrap_angle(float(self.kx)))
        object.__setattr__(self, "ky", wrap_angle(float(self.ky)))

    @classmethod
    def from_oblique(cls, k_plus: float, k_minus: float) -> "Momentum":
        # k_pm = (kx +- ky) / 2
        return cls(k_plus + k_minus, k_plus - k_minus)

    @property
    def k_plus(self) -> float:
        return (self.kx + self.ky) / 2

    @property
    def k_minus(self) -> float:
        return (self.kx - self.ky) / 2

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky])


@dataclass(frozen=True)
class GeometrySpec:
    shape: str = "square"
    L: int = 40
    theta: float = 0.0

    def __post_init__(self):
        if self.shape not in ("square", "rotated", "diamond"):
            raise InvalidGeometryError(f"unknown shape {self.shape!r}")
        if self.shape == "square" and self.theta != 0:
            raise InvalidGeometryError("square geometry has theta = 0")
        if self.shape == "diamond":
            object.__setattr__(self, "shape", "rotated")
            object.__setattr__(self, "theta", math.pi / 4)
        if not 0 <= self.theta <= math.pi / 4 + 1e-12:
            raise InvalidGeometryError(f"theta must lie in [0, pi/4], got {self.theta}")
        if int(self.L) != self.L or self.L < 3:
            raise InvalidGeometryError(f"L must be an integer >= 3, got {self.L}")


@dataclass(frozen=True)
class GeometryMask:
    """Occupied cells in row-major order (by y, then x)."""

    cells: tuple
    index_of: dict = field(compare=False, repr=False)

    @classmethod
    def from_cells(cls, cells: Iterable) -> "GeometryMask":
        ordered = tuple(sorted({(int(x), int(y)) for x, y in cells}, key=lambda c: (c[1], c[0])))
        if not ordered:
            raise InvalidGeometryError("mask has no cells")
        return cls(ordered, {c: i for i, c in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self.index_of

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.cells, dtype=float)

    @property
    def dim(self) -> int:
        return 2 * len(self.cells)

    def center(self) -> np.ndarray:
        return self.coords.mean(axis=0)

    def is_connected(self) -> bool:
        seen = {self.cells[0]}
        stack = [self.cells[0]]
        while stack:
            x, y = stack.pop()
            for dx, dy in NEIGHBOURS:
                nb = (x + dx, y + dy)
                if nb in self.index_of and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.cells)


def make_geometry(spec: GeometrySpec) -> GeometryMask:
    """Cells of a square of bounding width ``L`` rotated clockwise by ``theta``.

    The underlying square lattice never rotates; only the boundary polygon
    does.  ``L`` is the horizontal extent of the rotated square, which is the
    side for ``theta = 0`` and the diagonal for ``theta = pi/4``.  A cell is
    kept when its center lies inside the polygon; centers exactly on an edge
    are kept on the lower/left edges and dropped on the upper/right ones.
    """
    L = int(spec.L)
    theta = spec.theta
    c = (L - 1) / 2
    half = L / (math.cos(theta) + math.sin(theta)) / 2
    eps = 1e-9
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cells = []
    for y in range(L):
        for x in range(L):
            dx, dy = x - c, y - c
            u = cos_t * dx - sin_t * dy
            v = sin_t * dx + cos_t * dy
            if -half - eps <= u < half - eps and -half - eps <= v < half - eps:
                cells.append((x, y))
    mask = GeometryMask.from_cells(cells)
    if not mask.is_connected():
        raise InvalidGeometryError(f"geometry {spec} is not edge-connected")
    return mask


def rectangle(Lx: int, Ly: int = 1) -> GeometryMask:
    return GeometryMask.from_cells((x, y) for y in range(Ly) for x in range(Lx))


def boundary_layers(mask: GeometryMask) -> list:
    """Peel the mask into erosion layers, outermost first."""
    remaining = set(mask.cells)
    layers = []
    while remaining:
        layer = {
            (x, y)
            for x, y in remaining
            if sum((x + dx, y + dy) in remaining for dx, dy in NEIGHBOURS) < 4
        }
        layers.append(layer)
        remaining -= layer
    return layers


def boundary_shell(mask: GeometryMask, depth: int = 2) -> set:
    if depth < 1:
        raise InvalidInputError(f"depth must be >= 1, got {depth}")
    shell = set()
    for layer in boundary_layers(mask)[:depth]:
        shell |= layer
    return shell


def bloch_hamiltonian(params: HoppingParams, kx: float, ky: float) -> np.ndarray:
    """2x2 Bloch matrix h.sigma - i gamma (1 - sigma_z)/2 + delta_y sigma_y."""
    sx, cx = math.sin(kx), math.cos(kx)
    sy, cy = math.sin(ky), math.cos(ky)
    h0 = (params.t_p - params.t_s) * cx
    hx = -2 * params.t_sp_prime * sy * sx
    hy = 2 * params.t_sp * sx + 2 * params.t_sp_prime * cy * sx
    hz = -(params.t_p + params.t_s) * cx
    return (
        h0 * SIGMA_0
        + hx * SIGMA_X
        + (hy + params.delta_y) * SIGMA_Y
        + hz * SIGMA_Z
        - 0.5j * params.gamma * (SIGMA_0 - SIGMA_Z)
    )


def build_bloch(params: HoppingParams, k: Momentum) -> np.ndarray:
    return bloch_hamiltonian(params, k.kx, k.ky)


def bloch_grid(params: HoppingParams, kx, ky) -> np.ndarray:
    """Vectorised Bloch matrices, shape ``broadcast(kx, ky).shape + (2, 2)``."""
    kx, ky = np.broadcast_arrays(np.asarray(kx, dtype=float), np.asarray(ky, dtype=float))
    sx, cx, sy, cy = np.sin(kx), np.cos(kx), np.sin(ky), np.cos(ky)
    out = np.empty(kx.shape + (2, 2), dtype=complex)
    tq = params.t_sp_prime
    out[..., 0, 0] = -2 * params.t_s * cx
    out[..., 1, 1] = 2 * params.t_p * cx - 1j * params.gamma
    hx = -2 * tq * sy * sx
    hy = 2 * params.t_sp * sx + 2 * tq * cy * sx + params.delta_y
    out[..., 0, 1] = hx - 1j * hy
    out[..., 1, 0] = hx + 1j * hy
    return out


def _hoppings(params: HoppingParams):
    """(displacement, block) pairs; the Hermitian conjugates are added by the caller."""
    return (
        ((1, 0), params.hop_x),
        ((1, 1), params.hop_xy),
        ((-1, 1), -params.hop_xy),
    )


def assemble_blocks(n_cells: int, onsite: np.ndarray, bonds) -> sps.csr_matrix:
    """Sparse matrix from 2x2 blocks; ``bonds`` yields (i, j, block) for block (i, j)."""
    rows, cols, vals = [], [], []
    a, b = np.meshgrid(range(2), range(2), indexing="ij")
    a, b = a.ravel(), b.ravel()

    def put(i, j, block):
        rows.extend(2 * i + a)
        cols.extend(2 * j + b)
        vals.extend(block.ravel())

    for i in range(n_cells):
        put(i, i, onsite)
    for i, j, block in bonds:
        put(i, j, block)
    m = sps.coo_matrix((vals, (rows, cols)), shape=(2 * n_cells, 2 * n_cells), dtype=complex)
    m = m.tocsr()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def build_real_space(params: HoppingParams, mask: GeometryMask) -> sps.csr_matrix:
    """Open-boundary real-space Hamiltonian; bonds leaving the mask are dropped."""
    def bonds():
        for (x, y), i in mask.index_of.items():
            for (dx, dy), block in _hoppings(params):
                j = mask.index_of.get((x + dx, y + dy))
                if j is not None:
                    yield i, j, block
                    yield j, i, block.conj().T

    return assemble_blocks(len(mask), params.onsite, bonds())


def build_periodic(params: HoppingParams, L: int) -> sps.csr_matrix:
    """Hamiltonian of an L x L torus, cells in row-major order."""
    if L < 3:
        raise InvalidGeometryError("torus needs L >= 3 to keep bonds distinct")

    def bonds():
        for y in range(L):
            for x in range(L):
                i = y * L + x
                for (dx, dy), block in _hoppings(params):
                    j = ((y + dy) % L) * L + (x + dx) % L
                    yield i, j, block
                    yield j, i, block.conj().T

    return assemble_blocks(L * L, params.onsite, bonds())


def potential_diagonal(mask: GeometryMask, force, origin=None, orbitals: int = 2) -> np.ndarray:
    """Diagonal of the linear potential F.(r - origin) in the orbital basis."""
    coords = mask.coords
    origin = coords.mean(axis=0) if origin is None else np.asarray(origin, dtype=float)
    per_cell = (coords - origin) @ np.asarray(force, dtype=float)
    return np.repeat(per_cell, orbitals)
