"""Dense non-Hermitian eigenanalysis and per-state localization diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps

from .errors import (
    IllConditionedError,
    InvalidInputError,
    RefinementRequired,
    ResourceError,
    UndefinedValueError,
)
from .lattice import SIGMA_Z, GeometryMask, HoppingParams, Momentum, bloch_grid, build_bloch

DEFAULT_DIM_CAP = 14000
BOUNDARY_THRESHOLD = 0.5
MAX_PHASE_STEP = math.pi / 2


@dataclass(frozen=True)
class ComplexSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit 2-norm
    fractional_dimension: np.ndarray | None = None
    boundary_weight: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)


def eigensolve(H, dim_cap: int = DEFAULT_DIM_CAP) -> ComplexSpectrum:
    """Full right-eigenpair set, sorted lexicographically by (Re, Im)."""
    n = H.shape[0]
    if n > dim_cap:
        raise ResourceError(f"matrix dimension {n} exceeds cap {dim_cap}")
    dense = H.toarray() if sps.issparse(H) else np.asarray(H, dtype=complex)
    if not np.all(np.isfinite(dense)):
        raise InvalidInputError("matrix has non-finite entries")
    vals, vecs = np.linalg.eig(dense)
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return ComplexSpectrum(vals, vecs)


def eigen_residuals(H, spec: ComplexSpectrum) -> np.ndarray:
    """||H v - lambda v|| / ||H||_F for every pair."""
    dense = H.toarray() if sps.issparse(H) else np.asarray(H)
    r = dense @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
    return np.linalg.norm(r, axis=0) / np.linalg.norm(dense)


def cell_weights(vectors: np.ndarray, orbitals: int = 2) -> np.ndarray:
    """|psi|^2 summed over orbitals: shape (n_cells, n_states)."""
    v = np.asarray(vectors)
    if v.ndim == 1:
        v = v[:, None]
    return (np.abs(v) ** 2).reshape(v.shape[0] // orbitals, orbitals, -1).sum(axis=1)


def average_density(spec: ComplexSpectrum, mask: GeometryMask) -> np.ndarray:
    """Average density of all eigenstates per cell, renormalized to total 1.

    The raw average divides by the number of lattice sites, which makes the
    field sum to (states / sites); the renormalization only rescales it.
    """
    w = cell_weights(spec.eigenvectors).sum(axis=1) / len(mask)
    return w / w.sum()


def fractional_dimension(state: np.ndarray, n_sites: int) -> float:
    """D = -ln(sum |psi|^4) / ln sqrt(N)."""
    psi = np.asarray(state).ravel()
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0:
        raise UndefinedValueError("fractional dimension of the zero vector")
    if n_sites < 2:
        raise UndefinedValueError("fractional dimension needs at least two sites")
    p4 = np.sum(np.abs(psi) ** 4) / norm2**2
    return float(-math.log(p4) / math.log(math.sqrt(n_sites)))


def fractional_dimensions(vectors: np.ndarray, n_sites: int) -> np.ndarray:
    v = np.asarray(vectors)
    norm2 = np.sum(np.abs(v) ** 2, axis=0)
    p4 = np.sum(np.abs(v) ** 4, axis=0) / norm2**2
    return -np.log(p4) / math.log(math.sqrt(n_sites))


@dataclass(frozen=True)
class BoundaryStats:
    rho_b: np.ndarray  # per state
    rho_b_mean: float  # boundary share of the average density
    n_boundary: int


def shell_indices(mask: GeometryMask, shell) -> np.ndarray:
    cells = [c for c in shell]
    if not cells:
        raise InvalidInputError("boundary shell is empty")
    missing = [c for c in cells if c not in mask]
    if missing:
        raise InvalidInputError(f"shell cells outside the mask: {missing[:3]}")
    return np.array(sorted(mask.index_of[c] for c in cells))


def boundary_statistics(spec: ComplexSpectrum, mask: GeometryMask, shell) -> BoundaryStats:
    idx = shell_indices(mask, shell)
    w = cell_weights(spec.eigenvectors)
    rho_b = w[idx].sum(axis=0)
    density = average_density(spec, mask)
    return BoundaryStats(
        rho_b=rho_b,
        rho_b_mean=float(density[idx].sum() / density.sum()),
        n_boundary=int(np.sum(rho_b > BOUNDARY_THRESHOLD)),
    )


def analyze(H, mask: GeometryMask, shell, dim_cap: int = DEFAULT_DIM_CAP) -> ComplexSpectrum:
    """eigensolve plus per-state fractional dimension and boundary weight.

    The fractional dimension uses N = number of lattice cells, each holding
    two orbitals.
    """
    spec = eigensolve(H, dim_cap)
    fd = fractional_dimensions(spec.eigenvectors, len(mask))
    rho_b = cell_weights(spec.eigenvectors)[shell_indices(mask, shell)].sum(axis=0)
    return ComplexSpectrum(spec.eigenvalues, spec.eigenvectors, fd, rho_b)


def bulk_band_mask(params: HoppingParams, energies, grid_n: int = 201, delta: float = 0.1) -> np.ndarray:
    """True for energies within ``delta`` of the periodic (Bloch) spectrum.

    The Bloch spectrum of a 2D band fills an area of the complex plane, so a
    dense momentum grid covers it with spacing well below ``delta``; in-gap
    edge states sit far from every sample.
    """
    k = np.linspace(-math.pi, math.pi, grid_n, endpoint=False)
    bands = np.linalg.eigvals(bloch_grid(params, k[:, None], k[None, :])).ravel()
    energies = np.asarray(energies)
    out = np.empty(energies.shape, dtype=bool)
    for start in range(0, energies.size, 256):
        chunk = energies.ravel()[start:start + 256]
        d = np.min(np.abs(chunk[:, None] - bands[None, :]), axis=1)
        out.ravel()[start:start + 256] = d < delta
    return out


def symmetry_residuals(params: HoppingParams, k_samples: Sequence[Momentum]) -> dict:
    """Max-entry residuals of the mirror and transpose-mirror identities."""
    mirror = 0.0
    transpose_mirror = 0.0
    for k in k_samples:
        h = build_bloch(params, k)
        mirror = max(mirror, np.abs(SIGMA_Z @ h @ SIGMA_Z - build_bloch(params, Momentum(-k.kx, k.ky))).max())
        transpose_mirror = max(
            transpose_mirror,
            np.abs(SIGMA_Z @ h.T @ SIGMA_Z - build_bloch(params, Momentum(k.kx, -k.ky))).max(),
        )
    return {"mirror_residual": float(mirror), "transpose_mirror_residual": float(transpose_mirror)}


# -- momentum paths ---------------------------------------------------------

@dataclass(frozen=True)
class MomentumPath:
    """Straight segment k(s) = start + s * direction for s in [0, 1]."""

    start: tuple
    direction: tuple
    label: str = ""

    def sample(self, n: int, endpoint: bool = False) -> np.ndarray:
        s = np.linspace(0.0, 1.0, n, endpoint=endpoint)
        return np.asarray(self.start)[None, :] + s[:, None] * np.asarray(self.direction)[None, :]

    def reversed(self) -> "MomentumPath":
        end = tuple(np.asarray(self.start) + np.asarray(self.direction))
        return MomentumPath(end, tuple(-np.asarray(self.direction)), self.label + "-reversed")


def path_kx(ky: float) -> MomentumPath:
    """Closed loop kx in [-pi, pi) at fixed ky."""
    return MomentumPath((-math.pi, ky), (2 * math.pi, 0.0), f"kx@ky={ky:g}")


def path_ky(kx: float) -> MomentumPath:
    return MomentumPath((kx, -math.pi), (0.0, 2 * math.pi), f"ky@kx={kx:g}")


def path_kplus(k_minus: float) -> MomentumPath:
    """Closed loop in k_plus = (kx+ky)/2 at fixed k_minus = (kx-ky)/2."""
    return MomentumPath((-math.pi + k_minus, -math.pi - k_minus), (2 * math.pi, 2 * math.pi), f"k+@k-={k_minus:g}")


def path_kminus(k_plus: float) -> MomentumPath:
    return MomentumPath((-math.pi + k_plus, math.pi + k_plus), (2 * math.pi, -2 * math.pi), f"k-@k+={k_plus:g}")


def band_energies(params: HoppingParams, ks: np.ndarray) -> np.ndarray:
    """Both Bloch eigenvalues at each momentum, ordered by descending Im."""
    e = np.linalg.eigvals(bloch_grid(params, ks[:, 0], ks[:, 1]))
    order = np.argsort(-e.imag, axis=1, kind="stable")
    return np.take_along_axis(e, order, axis=1)


def band_trajectory(
    params: HoppingParams,
    path: MomentumPath,
    band: int,
    n: int,
    bloch: Callable | None = None,
) -> np.ndarray:
    """One band along a closed path, continued by nearest-neighbour matching.

    When the bands braid (the continued band ends on the other band after
    one loop) the path is traversed twice so the returned trace is closed.
    """
    trace = _band_trace(params, path, band, n, bloch)
    step = np.abs(np.diff(trace)).max()
    if abs(trace[-1] - trace[0]) > 4 * step + 1e-12:
        doubled = MomentumPath(path.start, tuple(2 * np.asarray(path.direction)), path.label)
        trace = _band_trace(params, doubled, band, 2 * n, bloch)
    return trace


def _band_trace(params, path, band, n, bloch):
    ks = path.sample(n)
    if bloch is None:
        e = np.linalg.eigvals(bloch_grid(params, ks[:, 0], ks[:, 1]))
    else:
        e = np.array([np.linalg.eigvals(np.atleast_2d(bloch(kx, ky))) for kx, ky in ks])
    traces = continue_bands(e)
    return traces[:, band]


def continue_bands(e: np.ndarray, tol: float = 1e-12):
    """Greedy nearest-neighbour continuation of eigenvalue rows.

    Seeds the first row by descending Im.  Returns the reordered array;
    ``continue_bands_flagged`` also reports degenerate samples.
    """
    return continue_bands_flagged(e, tol)[0]


def continue_bands_flagged(e: np.ndarray, tol: float = 1e-12):
    e = np.array(e, dtype=complex)
    nb = e.shape[1]
    out = np.empty_like(e)
    flags = np.zeros(len(e), dtype=bool)
    out[0] = e[0][np.argsort(-e[0].imag, kind="stable")]
    for i in range(1, len(e)):
        row = e[i]
        gaps = np.abs(row[:, None] - row[None, :])
        np.fill_diagonal(gaps, np.inf)
        if nb > 1 and gaps.min() < tol:
            # exact degeneracy: fall back to sorting by Re
            flags[i] = True
            out[i] = row[np.argsort(row.real, kind="stable")]
            continue
        free = list(range(nb))
        cur = np.empty(nb, dtype=complex)
        prev = out[i - 1]
        for b in np.argsort(np.min(np.abs(prev[:, None] - row[None, :]), axis=1)):
            j = min(free, key=lambda c: abs(row[c] - prev[b]))
            cur[b] = row[j]
            free.remove(j)
        out[i] = cur
    return out, flags


class SpectralWinding(int):
    """Integer winding number that remembers its raw phase sum."""

    raw: float

    def __new__(cls, value: int, raw: float):
        obj = super().__new__(cls, value)
        obj.raw = raw
        return obj


def winding_of_trace(trace: np.ndarray, E0: complex, min_distance: float = 1e-8) -> SpectralWinding:
    """Winding of a closed sampled curve (last point joins the first) around E0."""
    z = np.asarray(trace) - E0
    if np.min(np.abs(z)) <= min_distance:
        raise IllConditionedError(f"base energy {E0} lies on the trajectory")
    dphi = np.angle(np.roll(z, -1) / z)
    raw = float(dphi.sum() / (2 * math.pi))
    w = round(raw)
    if abs(raw - w) >= 0.01:
        raise RefinementRequired(f"winding residual {abs(raw - w):.3g} >= 0.01")
    # A closed polygon always sums to an integer, so coarse sampling shows
    # up as large single steps rather than as a residual.
    if np.abs(dphi).max() > MAX_PHASE_STEP:
        raise RefinementRequired(f"phase step {np.abs(dphi).max():.3g} rad exceeds {MAX_PHASE_STEP:.3g}")
    return SpectralWinding(int(w), raw)


def spectral_winding(
    params: HoppingParams,
    path: MomentumPath,
    band: int,
    E0: complex,
    samples: int = 2048,
    bloch: Callable | None = None,
    max_samples: int = 2**20,
) -> SpectralWinding:
    """Winding of arg(E_band(k) - E0) once around a closed momentum loop.

    Doubles the sampling until the phase sum lands within 0.01 of an
    integer, and fails only if that never happens below ``max_samples``.
    """
    samples = max(samples, 2048)
    while True:
        trace = band_trajectory(params, path, band, samples, bloch)
        try:
            return winding_of_trace(trace, E0)
        except RefinementRequired:
            if samples * 2 > max_samples:
                raise
            samples *= 2


def total_winding(params: HoppingParams, path: MomentumPath, E0: complex, samples: int = 2048, bloch=None) -> int:
    """Winding of det(H(k) - E0), i.e. summed over bands."""
    ks = path.sample(samples)
    if bloch is None:
        d = np.linalg.det(bloch_grid(params, ks[:, 0], ks[:, 1]) - E0 * np.eye(2))
    else:
        d = np.array([np.linalg.det(np.atleast_2d(bloch(kx, ky)) - E0 * np.eye(np.atleast_2d(bloch(kx, ky)).shape[0])) for kx, ky in ks])
    return int(winding_of_trace(d, 0.0))


@dataclass(frozen=True)
class BandPath:
    k: np.ndarray  # (n, 2)
    bands: np.ndarray  # (n, 2) complex, continuously ordered
    imag_crossings: np.ndarray  # sample indices where Im of the two bands cross
    degenerate: np.ndarray  # bool per sample


def band_path(params: HoppingParams, path: MomentumPath, n: int = 401, endpoint: bool = True) -> BandPath:
    ks = path.sample(n, endpoint=endpoint)
    e = np.linalg.eigvals(bloch_grid(params, ks[:, 0], ks[:, 1]))
    bands, flags = continue_bands_flagged(e)
    crossings = imag_crossings(bands)
    return BandPath(ks, bands, crossings, flags)


def imag_crossings(bands: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Sample indices where Im(band0) - Im(band1) changes sign or vanishes.

    Identically equal imaginary parts (Hermitian bands) are not crossings.
    """
    d = bands[:, 0].imag - bands[:, 1].imag
    if np.all(np.abs(d) < tol):
        return np.array([], dtype=int)
    idx = []
    for i in range(len(d) - 1):
        if abs(d[i]) < tol and (i == 0 or abs(d[i - 1]) >= tol):
            idx.append(i)
        elif d[i] * d[i + 1] < 0 and abs(d[i + 1]) >= tol:
            idx.append(i if abs(d[i]) <= abs(d[i + 1]) else i + 1)
    if abs(d[-1]) < tol and abs(d[-2]) >= tol:
        idx.append(len(d) - 1)
    return np.array(sorted(set(idx)), dtype=int)
