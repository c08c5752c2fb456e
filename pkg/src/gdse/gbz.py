"""One-dimensional generalized Brillouin zones along the oblique x+y and x-y directions.

The oblique variables are beta_pm = exp(i k_pm) with k_pm = (kx +- ky)/2, so
a real-space displacement (dx, dy) carries beta_+^(dx+dy) beta_-^(dx-dy).
Fixing beta_- turns the lattice into a 1D chain along x+y whose Bloch
matrix is a Laurent polynomial of degree 3 in beta_+ (and symmetrically).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import GBZToleranceError, InvalidInputError
from .lattice import HoppingParams, _hoppings
from .spectral import MomentumPath, path_kx, path_ky, spectral_winding

ROOT_TOL = 1e-6
MAX_SHIFT = 0.1


class DegenerateDegreeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LaurentPoly:
    """Coefficients keyed by integer power of the running variable."""

    coeffs: dict

    def __getitem__(self, n: int) -> complex:
        return self.coeffs.get(n, 0j)

    @property
    def low(self) -> int:
        return min(self.coeffs)

    def dense(self, low: int = -3, high: int = 3) -> np.ndarray:
        """Ascending coefficient array of beta^(-low) * f."""
        return np.array([self[n] for n in range(low, high + 1)], dtype=complex)

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=complex)
        return sum(c * beta**n for n, c in self.coeffs.items())


@dataclass(frozen=True)
class GBZPoint:
    k_minus: float  # the fixed transverse momentum of the slice
    E: complex
    beta: complex
    kappa: float
    beta3: complex = 0j
    beta4: complex = 0j
    seed_index: int = -1  # stripe eigenstate the point was refined from


@dataclass(frozen=True)
class GBZSlice:
    k_minus: float
    points: list
    stripe_energies: np.ndarray
    stripe_vectors: np.ndarray = field(repr=False)
    n_rejected: int = 0

    @property
    def acceptance(self) -> float:
        return len(self.points) / max(len(self.stripe_energies), 1)


@dataclass(frozen=True)
class KappaField:
    k_grid: np.ndarray
    kappa: np.ndarray  # kappa[i_running, i_fixed]
    direction: str  # "plus": running k_plus at fixed k_minus; "minus" the mirror
    failed: tuple = ()

    def rows(self):
        """(k_plus, k_minus, kappa) triples in grid order."""
        for i, a in enumerate(self.k_grid):
            for j, b in enumerate(self.k_grid):
                if self.direction == "plus":
                    yield a, b, self.kappa[i, j]
                else:
                    yield b, a, self.kappa[i, j]


def _require_oblique(params: HoppingParams):
    if params.delta_y != 0:
        raise InvalidInputError("oblique GBZ needs delta_y = 0; use straight_direction_winding_scan")


def laurent_blocks(params: HoppingParams, k_fixed: float, direction: str = "plus") -> dict:
    """2x2 Laurent blocks h_n of the chain along x+y ("plus") or x-y ("minus").

    ``k_fixed`` is the conserved oblique momentum of the other direction.
    Block h_n couples chain site j to site j+n.
    """
    _require_oblique(params)
    if direction not in ("plus", "minus"):
        raise InvalidInputError(f"direction must be 'plus' or 'minus', got {direction!r}")
    b_fixed = np.exp(1j * k_fixed)
    h = {0: params.onsite.copy()}
    for (dx, dy), T in _hoppings(params):
        for (ex, ey), B in (((dx, dy), T), ((-dx, -dy), T.conj().T)):
            run, other = (ex + ey, ex - ey) if direction == "plus" else (ex - ey, ex + ey)
            h[run] = h.get(run, 0) + B * b_fixed**other
    return h


def bloch_oblique(params: HoppingParams, beta, k_fixed: float, direction: str = "plus") -> np.ndarray:
    """Bloch matrix at complex running variable ``beta``."""
    h = laurent_blocks(params, k_fixed, direction)
    return sum(B * complex(beta) ** n for n, B in h.items())


def _det_coeffs(h: dict, E: complex) -> dict:
    lo = min(h)
    span = max(h) - lo + 1
    M = [[np.zeros(span, complex) for _ in range(2)] for _ in range(2)]
    for n, B in h.items():
        for a in range(2):
            for b in range(2):
                M[a][b][n - lo] += B[a, b]
    M[0][0][-lo] -= E
    M[1][1][-lo] -= E
    d = np.convolve(M[0][0], M[1][1]) - np.convolve(M[0][1], M[1][0])
    return {n + 2 * lo: c for n, c in enumerate(d) if c != 0}


def char_poly(params: HoppingParams, k_minus: float, E: complex, direction: str = "plus") -> LaurentPoly:
    """f(beta, E) = det[H(beta) - E] as a Laurent polynomial in the running variable."""
    coeffs = _det_coeffs(laurent_blocks(params, k_minus, direction), E)
    scale = max(abs(c) for c in coeffs.values())
    coeffs = {n: c for n, c in coeffs.items() if abs(c) > 1e-14 * scale}
    if params.t_sp * params.t_sp_prime == 0:
        warnings.warn("t_sp * t_sp_prime = 0: polynomial degree drops", DegenerateDegreeWarning, stacklevel=2)
    return LaurentPoly(coeffs)


def char_poly_expanded(params: HoppingParams, k_minus: float, E: complex) -> LaurentPoly:
    """Hand-expanded coefficients of det[H(beta_+, beta_-) - E]."""
    ts, tp, tsp, tq, g = params.t_s, params.t_p, params.t_sp, params.t_sp_prime, params.gamma
    bm = np.exp(1j * k_minus)
    a = -E * tp + E * ts + 1j * g * ts
    c2 = -tp * ts + tsp**2 + tq**2
    return LaurentPoly({
        3: tsp * tq * bm,
        2: c2 * bm**2,
        1: a * bm + tsp * tq * bm**3 - 2 * tsp * tq / bm,
        0: E**2 + 1j * g * E - 2 * tp * ts - 2 * tsp**2 - 2 * tq**2,
        -1: a / bm + tsp * tq / bm**3 - 2 * tsp * tq * bm,
        -2: c2 / bm**2,
        -3: tsp * tq / bm,
    })


def sorted_roots(poly: LaurentPoly) -> np.ndarray:
    """Roots of beta^(-low) f, ascending by modulus then argument."""
    lo, hi = poly.low, max(poly.coeffs)
    r = P.polyroots(poly.dense(lo, hi))
    return r[np.lexsort((np.angle(r), np.abs(r)))]


def stripe_hamiltonian(h: dict, L: int) -> np.ndarray:
    H = np.zeros((2 * L, 2 * L), dtype=complex)
    for n, B in h.items():
        for j in range(max(0, -n), min(L, L - n)):
            H[2 * j:2 * j + 2, 2 * (j + n):2 * (j + n) + 2] = B
    return H


def _middle_pair(h: dict, E: complex):
    r = sorted_roots(LaurentPoly(_det_coeffs(h, E)))
    m = len(r) // 2
    return r, r[m - 1], r[m]


def refine_energy(h: dict, E: complex, max_iter: int = 80, tol: float = 1e-12):
    """Newton-move E until the two middle roots share a modulus.

    A stripe of finite length only samples the GBZ condition up to O(1/L),
    so each seed energy is pushed onto |beta_3| = |beta_4| in the complex
    E plane along the steepest direction of ln|beta_3/beta_4|.
    """
    dE = 1e-7
    for _ in range(max_iter):
        r, b3, b4 = _middle_pair(h, E)
        g = math.log(abs(b3) / abs(b4))
        if abs(g) < tol:
            break
        coeffs = _det_coeffs(h, E)
        lo, hi = min(coeffs), max(coeffs)
        arr = np.array([coeffs.get(n, 0) for n in range(lo, hi + 1)])
        up = _det_coeffs(h, E + dE)
        dn = _det_coeffs(h, E - dE)
        d_E = np.array([(up.get(n, 0) - dn.get(n, 0)) / (2 * dE) for n in range(lo, hi + 1)])
        pair = np.array([b3, b4])
        dbeta = -P.polyval(pair, d_E) / P.polyval(pair, P.polyder(arr))
        slope = dbeta[0] / b3 - dbeta[1] / b4
        # coalescing roots: no usable direction, leave E for the acceptance test
        if not np.isfinite(slope) or slope == 0:
            break
        step = -g * np.conj(slope) / abs(slope) ** 2
        if abs(step) > MAX_SHIFT:
            step *= MAX_SHIFT / abs(step)
        E = E + step
    r, b3, b4 = _middle_pair(h, E)
    return E, b3, b4


def gbz_slice(
    params: HoppingParams,
    k_minus: float,
    stripe_L: int = 60,
    tol: float = ROOT_TOL,
    direction: str = "plus",
    min_acceptance: float = 0.8,
) -> GBZSlice:
    """GBZ points seeded by the open-stripe spectrum at one fixed transverse momentum.

    Seeds whose refinement wanders farther than MAX_SHIFT (in-gap end
    states, which have no bulk counterpart) are rejected.
    """
    h = laurent_blocks(params, k_minus, direction)
    energies, vectors = np.linalg.eig(stripe_hamiltonian(h, stripe_L))
    order = np.lexsort((energies.imag, energies.real))
    energies, vectors = energies[order], vectors[:, order]
    points = []
    for i, E0 in enumerate(energies):
        E, b3, b4 = refine_energy(h, E0)
        if abs(E - E0) > MAX_SHIFT or abs(math.log(abs(b3) / abs(b4))) >= tol:
            continue
        kappa = 0.5 * math.log(abs(b3) * abs(b4))
        beta = math.exp(kappa) * np.exp(1j * np.angle(b3))
        points.append(GBZPoint(k_minus, complex(E), complex(beta), kappa, complex(b3), complex(b4), i))
    out = GBZSlice(k_minus, points, energies, vectors, len(energies) - len(points))
    if out.acceptance < min_acceptance:
        raise GBZToleranceError(
            f"only {out.acceptance:.0%} of stripe energies accepted at k={k_minus:.4g}; "
            "raise stripe_L or relax tol"
        )
    return out


def stripe_centroids(sl: GBZSlice) -> np.ndarray:
    """Density centroid (in chain sites) of every stripe eigenstate."""
    L = sl.stripe_vectors.shape[0] // 2
    dens = (np.abs(sl.stripe_vectors) ** 2).reshape(L, 2, -1).sum(axis=1)
    return np.arange(L) @ dens / dens.sum(axis=0)


def centroid_agreement(sl: GBZSlice, flat_tol: float = 1e-6) -> np.ndarray:
    """Per accepted point: does sign(kappa) predict the side the seed state sits on?

    kappa > 0 predicts the high-index end, kappa < 0 the low-index end and
    |kappa| < flat_tol an extended state centred within a tenth of the stripe.
    """
    L = sl.stripe_vectors.shape[0] // 2
    offset = stripe_centroids(sl) - (L - 1) / 2
    ok = []
    for p in sl.points:
        d = offset[p.seed_index]
        if abs(p.kappa) < flat_tol:
            ok.append(abs(d) < L / 10)
        else:
            ok.append(np.sign(d) == np.sign(p.kappa))
    return np.array(ok, dtype=bool)


def spectrum_residuals(params: HoppingParams, sl: GBZSlice, direction: str = "plus") -> np.ndarray:
    """Relative distance of each accepted E from the eigenvalues of H(beta)."""
    out = []
    for p in sl.points:
        ev = np.linalg.eigvals(bloch_oblique(params, p.beta, p.k_minus, direction))
        out.append(np.min(np.abs(ev - p.E)) / max(abs(p.E), 1.0))
    return np.array(out)


def kappa_map(
    params: HoppingParams,
    grid_n: int = 64,
    stripe_L: int = 60,
    direction: str = "plus",
    tol: float = ROOT_TOL,
) -> KappaField:
    """Inverse localization length over the oblique momentum grid.

    ``direction="plus"`` gives kappa_+(k_+, k_-) stored as kappa[i(k_+), j(k_-)];
    ``"minus"`` is the mirrored construction kappa_-(k_-, k_+) stored as
    kappa[i(k_-), j(k_+)].  Each accepted point contributes the arguments of
    both middle roots; every grid momentum takes kappa from the nearest one.
    """
    if grid_n < 32:
        raise InvalidInputError("grid_n must be >= 32")
    k = -math.pi + 2 * math.pi * np.arange(grid_n) / grid_n
    kappa = np.full((grid_n, grid_n), np.nan)
    failed = []
    for j, kf in enumerate(k):
        try:
            sl = gbz_slice(params, kf, stripe_L, tol, direction)
        except GBZToleranceError:
            failed.append(j)
            continue
        if not sl.points:
            failed.append(j)
            continue
        phases = np.array([np.angle(b) for p in sl.points for b in (p.beta3, p.beta4)])
        values = np.array([p.kappa for p in sl.points for _ in range(2)])
        dist = np.abs(np.angle(np.exp(1j * (k[:, None] - phases[None, :]))))
        kappa[:, j] = values[np.argmin(dist, axis=1)]
    return KappaField(k, kappa, direction, tuple(failed))


def transpose_mirror_residual(kplus: KappaField, kminus: KappaField) -> float:
    """max |kappa_+(a, b) - kappa_-(b, a)| over the shared grid."""
    # kappa_-(b, a) means k_+ = b, k_- = a; the minus field stores its
    # running k_- first, so that value sits at kminus.kappa[i(a), j(b)].
    return float(np.nanmax(np.abs(kplus.kappa - kminus.kappa)))


def winding_field(trace: np.ndarray, E0: np.ndarray) -> np.ndarray:
    """Rounded winding of a closed trace around every energy in ``E0``."""
    z = np.asarray(trace)[:, None] - np.asarray(E0).ravel()[None, :]
    w = np.angle(np.roll(z, -1, axis=0) / z).sum(axis=0) / (2 * math.pi)
    return np.rint(w).astype(int).reshape(np.shape(E0))


def straight_direction_winding_scan(
    params: HoppingParams,
    delta_y_values=(0.0, 0.1),
    fixed_momenta=(-math.pi, -0.5 * math.pi, 0.0, 0.1 * math.pi, 0.5 * math.pi),
    samples: int = 2048,
    probe_n: int = 48,
) -> list:
    """Band windings along kx (fixed ky) and ky (fixed kx) for several delta_y.

    For every loop a probe grid over the trace's bounding box looks for a
    base energy with nonzero winding; the winding is then recomputed at
    that energy with the full phase-summation routine.  Rows carry
    ``phase``: "GDSE" when every winding at that delta_y vanishes and
    "line-NHSE" when some kx winding does not.
    """
    from .spectral import band_trajectory

    rows = []
    for dy in delta_y_values:
        p = params.replace(delta_y=dy)
        block = []
        for label, make in (("kx", path_kx), ("ky", path_ky)):
            for kf in fixed_momenta:
                path: MomentumPath = make(kf)
                for band in (0, 1):
                    trace = band_trajectory(p, path, band, samples)
                    row = {"delta_y": dy, "path": label, "fixed": kf, "band": band}
                    re0, re1 = trace.real.min(), trace.real.max()
                    im0, im1 = trace.imag.min(), trace.imag.max()
                    if max(re1 - re0, im1 - im0) < 1e-9:
                        block.append({**row, "E0": complex(trace[0]) + 1.0, "winding": 0})
                        continue
                    pad = 0.05 * max(re1 - re0, im1 - im0)
                    grid = (np.linspace(re0 - pad, re1 + pad, probe_n)[None, :]
                            + 1j * np.linspace(im0 - pad, im1 + pad, probe_n)[:, None]).ravel()
                    step = np.abs(np.diff(trace)).max()
                    dist = np.min(np.abs(trace[:, None] - grid[None, :]), axis=0)
                    grid = grid[dist > 2 * step]
                    w = winding_field(trace, grid)
                    pick = int(np.argmax(np.abs(w))) if w.size else None
                    if pick is None:
                        block.append({**row, "E0": complex(trace.mean()), "winding": 0})
                        continue
                    E0 = complex(grid[pick])
                    block.append({**row, "E0": E0, "winding": int(spectral_winding(p, path, band, E0, samples))})
        nonzero_kx = any(r["winding"] for r in block if r["path"] == "kx")
        nonzero = any(r["winding"] for r in block)
        phase = "line-NHSE" if nonzero_kx else ("GDSE" if not nonzero else "other")
        for r in block:
            r["phase"] = phase
        rows.extend(block)
    return rows
