"""Reference models: the sp-ladder, a 2D single-band Hatano-Nelson model and a generalized SSH chain."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sps

from .errors import InvalidGeometryError, InvalidInputError
from .lattice import (
    GeometryMask,
    HoppingParams,
    _hoppings,
    bloch_hamiltonian,
    make_geometry,
    rectangle,
)


@dataclass(frozen=True)
class ModelDescriptor:
    """A translation-invariant tight-binding model.

    ``bonds`` lists every (displacement, block) term explicitly, Hermitian
    partners included, so non-reciprocal models need no special casing.
    Block B at displacement d sits in matrix block (r, r + d).
    """

    name: str
    dim: int  # spatial dimension
    bands: int
    params: dict
    onsite: np.ndarray
    bonds: tuple
    bloch: Callable  # bloch(kx, ky) -> (bands, bands) array

    def real_space(self, mask: GeometryMask) -> sps.csr_matrix:
        nb = self.bands
        rows, cols, vals = [], [], []
        a, b = np.meshgrid(range(nb), range(nb), indexing="ij")
        a, b = a.ravel(), b.ravel()

        def put(i, j, block):
            rows.extend(nb * i + a)
            cols.extend(nb * j + b)
            vals.extend(np.asarray(block).ravel())

        for (x, y), i in mask.index_of.items():
            put(i, i, self.onsite)
            for (dx, dy), block in self.bonds:
                j = mask.index_of.get((x + dx, y + dy))
                if j is not None:
                    put(i, j, block)
        n = nb * len(mask)
        m = sps.coo_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex).tocsr()
        m.eliminate_zeros()
        return m

    def periodic(self, Lx: int, Ly: int = 1) -> sps.csr_matrix:
        """Torus (or ring for 1D models) of Lx x Ly cells in row-major order."""
        if Lx < 3 or (self.dim == 2 and Ly < 3):
            raise InvalidGeometryError("periodic lattice needs at least 3 cells per periodic direction")
        nb = self.bands
        n = nb * Lx * Ly
        m = sps.lil_matrix((n, n), dtype=complex)
        for y in range(Ly):
            for x in range(Lx):
                i = y * Lx + x
                m[nb * i:nb * i + nb, nb * i:nb * i + nb] += self.onsite
                for (dx, dy), block in self.bonds:
                    j = ((y + dy) % Ly) * Lx + (x + dx) % Lx
                    m[nb * i:nb * i + nb, nb * j:nb * j + nb] += block
        return m.tocsr()

    def bloch_from_bonds(self, kx: float, ky: float = 0.0) -> np.ndarray:
        h = np.array(self.onsite, dtype=complex)
        for (dx, dy), block in self.bonds:
            h = h + np.asarray(block) * cmath.exp(1j * (kx * dx + ky * dy))
        return h

    def geometry(self, L: int, shape: str = "square", theta: float = 0.0) -> GeometryMask:
        if self.dim == 1:
            return rectangle(L, 1)
        from .lattice import GeometrySpec

        return make_geometry(GeometrySpec(shape, L, theta))


def sp_ladder_descriptor(params: HoppingParams) -> ModelDescriptor:
    bonds = []
    for d, T in _hoppings(params):
        bonds.append((d, T))
        bonds.append(((-d[0], -d[1]), T.conj().T))
    return ModelDescriptor(
        name="sp-ladder",
        dim=2,
        bands=2,
        params=params.as_dict(),
        onsite=params.onsite,
        bonds=tuple(bonds),
        bloch=lambda kx, ky: bloch_hamiltonian(params, kx, ky),
    )


def hn2d_bloch(kx: float, ky: float) -> complex:
    return 2 * math.cos(kx) + 1j * math.sin(ky) - 1j


def hn2d_descriptor() -> ModelDescriptor:
    one = np.ones((1, 1), dtype=complex)
    bonds = (
        ((1, 0), one),
        ((-1, 0), one),
        ((0, 1), 0.5 * one),  # 1/2 e^{iky} - 1/2 e^{-iky} = i sin ky
        ((0, -1), -0.5 * one),
    )
    return ModelDescriptor(
        name="hn2d",
        dim=2,
        bands=1,
        params={},
        onsite=-1j * one,
        bonds=bonds,
        bloch=lambda kx, ky: np.array([[hn2d_bloch(kx, ky)]]),
    )


def ssh_bloch(tL, tR, tLp, tRp, k: float) -> np.ndarray:
    return np.array(
        [[0, tL + tRp * cmath.exp(-1j * k)], [tR + tLp * cmath.exp(1j * k), 0]],
        dtype=complex,
    )


def ssh_descriptor(tL, tR, tLp, tRp) -> ModelDescriptor:
    """Chain with intra-cell A->B amplitude tL, B->A tR and inter-cell tLp, tRp.

    H[A_j, B_j] = tL, H[B_j, A_j] = tR, H[A_j, B_{j-1}] = tRp, H[B_j, A_{j+1}] = tLp.
    """
    for v in (tL, tR, tLp, tRp):
        if not cmath.isfinite(complex(v)):
            raise InvalidInputError("SSH couplings must be finite")
    onsite = np.array([[0, tL], [tR, 0]], dtype=complex)
    bonds = (
        ((1, 0), np.array([[0, 0], [tLp, 0]], dtype=complex)),
        ((-1, 0), np.array([[0, tRp], [0, 0]], dtype=complex)),
    )
    return ModelDescriptor(
        name="ssh",
        dim=1,
        bands=2,
        params={"tL": tL, "tR": tR, "tLp": tLp, "tRp": tRp},
        onsite=onsite,
        bonds=bonds,
        bloch=lambda kx, ky=0.0: ssh_bloch(tL, tR, tLp, tRp, kx),
    )


# Parameter sets of the supplementary SSH figures.
SSH_SEPARABLE_ARCS = (12 / 11, 10 / 11, -5 / 11, 6 / 11)
SSH_SINGLE_LOOP = (1.3, 0.7, 1.6, -0.5)
SSH_SEPARABLE_NHSE = (1.3j, 0.7, 0.2, 0.9)


def get_model(name: str, **params) -> ModelDescriptor:
    if name in ("sp-ladder", "sp_ladder"):
        return sp_ladder_descriptor(HoppingParams(**params))
    if name == "hn2d":
        if params:
            raise InvalidInputError("hn2d takes no parameters")
        return hn2d_descriptor()
    if name == "ssh":
        return ssh_descriptor(**params)
    raise InvalidInputError(f"unknown model {name!r}")
