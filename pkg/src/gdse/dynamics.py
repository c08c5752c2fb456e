"""Wave-packet evolution under a static force and semiclassical band reconstruction.

A packet built from one Bloch band drifts in momentum as k(t) = k0 - F t.
Its centre of mass moves with the group velocity of Re E and its norm
decays at twice Im E, so both parts of the band can be read back from
the trajectory.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sps
from scipy.integrate import cumulative_trapezoid

from .errors import (
    BandSelectionError,
    InsufficientDataError,
    NoPeriodError,
    NumericError,
    StepSizeError,
)
from .lattice import NEIGHBOURS, GeometryMask, HoppingParams
from .models import ModelDescriptor, sp_ladder_descriptor
from .spectral import MomentumPath, band_path

log = logging.getLogger(__name__)

DEFAULT_SIGMA0 = 4.5
STABILITY_LIMIT = 0.1
DT_FACTOR = 0.05


def _as_model(model) -> ModelDescriptor:
    if isinstance(model, HoppingParams):
        return sp_ladder_descriptor(model)
    return model


@dataclass(frozen=True)
class WavePacketSpec:
    k0: tuple
    sigma0: float = DEFAULT_SIGMA0
    band: int = 0  # 0 = larger Im E at k0
    r0: tuple | None = None  # defaults to the mask centre

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if self.band not in (0, 1):
            raise ValueError("band must be 0 or 1")


def select_band(model, k0, band: int = 0, force=None):
    """Eigenpair of the Bloch matrix at k0, bands ranked by descending Im E.

    If the two bands have equal Im E at k0 (an imaginary crossing) the rank
    is taken just after the start of the drive, at k0 - 1e-3 F.
    """
    model = _as_model(model)
    k0 = np.asarray(k0, dtype=float)
    w, v = np.linalg.eig(np.atleast_2d(model.bloch(*k0)))
    if len(w) == 1:
        return complex(w[0]), v[:, 0]
    if abs(w[0] - w[1]) < 1e-10:
        raise BandSelectionError(f"degenerate eigenvalues at k0 = {tuple(k0)}")
    if abs(np.vdot(v[:, 0], v[:, 1])) > 1 - 1e-8:
        raise BandSelectionError(f"coalescing eigenvectors at k0 = {tuple(k0)}")
    im = w.imag
    if abs(im[0] - im[1]) < 1e-9:
        if force is None:
            raise BandSelectionError("bands tie in Im E at k0; pass the drive force to break the tie")
        w1 = np.linalg.eigvals(np.atleast_2d(model.bloch(*(k0 - 1e-3 * np.asarray(force)))))
        target = w1[np.argsort(-w1.imag, kind="stable")[band]]
        i = int(np.argmin(np.abs(w - target)))
    else:
        i = int(np.argsort(-im, kind="stable")[band])
    return complex(w[i]), v[:, i]


def make_wave_packet(mask: GeometryMask, spec: WavePacketSpec, model, force=None) -> np.ndarray:
    """A exp(-(r-r0)^2/sigma0 + i k0.r) u_k0, normalized.

    The envelope divides by sigma0 itself, not 2 sigma0^2.
    """
    model = _as_model(model)
    coords = mask.coords
    r0 = mask.center() if spec.r0 is None else np.asarray(spec.r0, dtype=float)
    _check_clearance(mask, r0, spec.sigma0)
    _, u = select_band(model, spec.k0, spec.band, force)
    k0 = np.asarray(spec.k0, dtype=float)
    env = np.exp(-np.sum((coords - r0) ** 2, axis=1) / spec.sigma0 + 1j * coords @ k0)
    psi = (env[:, None] * u[None, :]).ravel()
    return psi / np.linalg.norm(psi)


def _check_clearance(mask: GeometryMask, r0, sigma0: float):
    # only axes the mask extends along have edges (a single row is a chain)
    coords = mask.coords
    axes = [a for a in (0, 1) if np.ptp(coords[:, a]) > 0]
    steps = [s for s in NEIGHBOURS if any(s[a] for a in axes)]
    edge = np.array(
        [c for c in mask.cells if any((c[0] + dx, c[1] + dy) not in mask for dx, dy in steps)], dtype=float
    )
    gap = np.min(np.linalg.norm((edge - r0)[:, axes], axis=1)) if axes else 0.0
    if gap < 3 * sigma0:
        warnings.warn(f"packet centre is {gap:.1f} cells from the edge (< 3 sigma0)", stacklevel=3)


def bloch_period(force, max_denominator: int = 10**6) -> float:
    """2 pi / gcrd(Fx, Fy), or 2 pi / |F_i| when the other component vanishes."""
    comps = [float(f) for f in force]
    nonzero = [abs(f) for f in comps if f != 0]
    if not nonzero:
        raise NoPeriodError("zero force has no Bloch period")
    if len(nonzero) == 1:
        return 2 * math.pi / nonzero[0]
    fracs = []
    for f in nonzero:
        q = Fraction(f).limit_denominator(max_denominator)
        if abs(float(q) - f) > 1e-12 * max(1.0, f):
            raise NoPeriodError(f"force component {f} is not a rational with denominator <= {max_denominator}")
        fracs.append(q)
    a, b = fracs
    g = Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator), a.denominator * b.denominator)
    return 2 * math.pi / float(g)


@dataclass(frozen=True)
class TrajectorySeries:
    t: np.ndarray
    r: np.ndarray  # (n, 2) centre of mass
    log_norm: np.ndarray  # ln N_t
    k: np.ndarray  # (n, 2) k0 - F t
    force: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class ReconstructedSpectrum:
    t: np.ndarray
    k: np.ndarray
    re_E: np.ndarray
    im_E: np.ndarray

    @property
    def E(self) -> np.ndarray:
        return self.re_E + 1j * self.im_E


def default_dt(H, potential) -> float:
    return DT_FACTOR / _radius_estimate(H, potential)


def _radius_estimate(H, potential) -> float:
    # max absolute row sum bounds the spectral radius
    row = np.asarray(abs(H).sum(axis=1)).ravel()
    return float(np.max(row + np.abs(potential)))


def evolve(
    H,
    mask: GeometryMask,
    force,
    psi0: np.ndarray,
    duration: float,
    dt: float | None = None,
    k0=(0.0, 0.0),
    origin=None,
    orbitals: int | None = None,
    record_every: int = 1,
) -> TrajectorySeries:
    """Fixed-step RK4 for i dpsi/dt = (H + F.(r - origin)) psi.

    The state is renormalized after every step and the logarithms of the
    norm factors are accumulated, so the returned log-norm never underflows.
    The step is shortened to divide ``duration`` evenly.
    """
    force = np.asarray(force, dtype=float)
    nb = orbitals or H.shape[0] // len(mask)
    coords = mask.coords
    origin = mask.center() if origin is None else np.asarray(origin, dtype=float)
    potential = np.repeat((coords - origin) @ force, nb)
    radius = _radius_estimate(H, potential)
    if dt is None:
        dt = DT_FACTOR / radius
    n_steps = max(1, int(math.ceil(duration / dt - 1e-9)))
    dt = duration / n_steps
    if dt * radius >= STABILITY_LIMIT:
        raise StepSizeError(f"dt * spectral radius = {dt * radius:.3g} >= {STABILITY_LIMIT}")

    A = (sps.csr_matrix(H) + sps.diags(potential)) * (-1j)
    rc = np.repeat(coords, nb, axis=0)
    psi = np.array(psi0, dtype=complex)
    norm = np.linalg.norm(psi)
    psi /= norm
    ln = 2 * math.log(norm)

    ts, rs, lns = [0.0], [np.abs(psi) ** 2 @ rc], [ln]
    for s in range(1, n_steps + 1):
        k1 = A @ psi
        k2 = A @ (psi + 0.5 * dt * k1)
        k3 = A @ (psi + 0.5 * dt * k2)
        k4 = A @ (psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = np.linalg.norm(psi)
        if not (norm > 0 and math.isfinite(norm)):
            raise NumericError(f"state norm became {norm} at step {s}")
        psi /= norm
        ln += 2 * math.log(norm)
        if s % record_every == 0 or s == n_steps:
            ts.append(s * dt)
            rs.append(np.abs(psi) ** 2 @ rc)
            lns.append(ln)
    t = np.array(ts)
    k = np.asarray(k0, dtype=float)[None, :] - t[:, None] * force[None, :]
    log.debug("evolved %d steps, dt=%.3g", n_steps, dt)
    return TrajectorySeries(t, np.array(rs), np.array(lns), k, force)


def reconstruct_spectrum(traj: TrajectorySeries, anchor: complex) -> ReconstructedSpectrum:
    """Im E from the log-norm slope, Re E by integrating -F.v from the anchor."""
    if len(traj) < 64:
        raise InsufficientDataError(f"need >= 64 samples, got {len(traj)}")
    t = traj.t
    im_E = 0.5 * np.gradient(traj.log_norm, t)
    v = np.gradient(traj.r, t, axis=0)
    re_E = anchor.real - cumulative_trapezoid(v @ traj.force, t, initial=0.0)
    return ReconstructedSpectrum(t, traj.k, re_E, im_E)


def exact_dominant_band(model, ks: np.ndarray) -> np.ndarray:
    """Eigenvalue with the largest Im E at every momentum."""
    model = _as_model(model)
    out = np.empty(len(ks), dtype=complex)
    for i, (kx, ky) in enumerate(ks):
        w = np.linalg.eigvals(np.atleast_2d(model.bloch(kx, ky)))
        out[i] = w[np.argmax(w.imag)]
    return out


@dataclass(frozen=True)
class SplittingProfile:
    re_E: np.ndarray
    delta: np.ndarray  # |Im E(forward) - Im E(backward)|
    max: float


def _monotone_segments(x: np.ndarray):
    d = np.sign(np.gradient(x))
    segs, start = [], 0
    for j in range(1, len(x)):
        if d[j] != d[start] or j == len(x) - 1:
            segs.append((start, j, d[start]))
            start = j
    return segs


def degeneracy_splitting(rec: ReconstructedSpectrum, n_grid: int = 200, min_len: int = 3) -> SplittingProfile:
    """Im E difference between forward and backward movers at equal Re E.

    The trajectory is cut into runs where Re E rises or falls.  Every rising
    run is compared with every falling run on their common Re E window, by
    linear interpolation of Im E onto ``n_grid`` points.
    """
    re, im = rec.re_E, rec.im_E
    segs = _monotone_segments(re)
    up = [(a, b) for a, b, d in segs if d > 0 and b - a >= min_len]
    down = [(a, b) for a, b, d in segs if d < 0 and b - a >= min_len]
    xs, ds = [], []
    for a, b in up:
        r1, i1 = re[a:b + 1], im[a:b + 1]
        for c, e in down:
            r2, i2 = re[c:e + 1], im[c:e + 1]
            lo, hi = max(r1.min(), r2.min()), min(r1.max(), r2.max())
            if hi <= lo:
                continue
            g = np.linspace(lo, hi, n_grid)
            o1, o2 = np.argsort(r1), np.argsort(r2)
            xs.append(g)
            ds.append(np.abs(np.interp(g, r1[o1], i1[o1]) - np.interp(g, r2[o2], i2[o2])))
    if not xs:
        return SplittingProfile(np.array([]), np.array([]), 0.0)
    x, d = np.concatenate(xs), np.concatenate(ds)
    order = np.argsort(x, kind="stable")
    return SplittingProfile(x[order], d[order], float(d.max()))


def adiabaticity_report(params: HoppingParams, path: MomentumPath, n: int = 2001) -> list:
    """Points on the path where the two bands' Im E cross, with the local Re gap."""
    bp = band_path(params, path, n)
    out = []
    for i in bp.imag_crossings:
        e0, e1 = bp.bands[i]
        out.append({
            "index": int(i),
            "kx": float(bp.k[i, 0]),
            "ky": float(bp.k[i, 1]),
            "re_gap": float(abs(e0.real - e1.real)),
        })
    return out


@dataclass(frozen=True)
class DriveResult:
    trajectory: TrajectorySeries
    reconstruction: ReconstructedSpectrum
    anchor: complex
    exact: np.ndarray  # dominant exact band at the drifted momenta

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.reconstruction.E - self.exact)))


def run_drive(
    model,
    mask: GeometryMask,
    k0,
    force,
    duration: float,
    sigma0: float = DEFAULT_SIGMA0,
    band: int = 0,
    dt: float | None = None,
    record_every: int = 1,
) -> DriveResult:
    """Packet at the mask centre, evolved and reconstructed in one call."""
    model = _as_model(model)
    force = np.asarray(force, dtype=float)
    spec = WavePacketSpec(tuple(k0), sigma0, band)
    psi0 = make_wave_packet(mask, spec, model, force)
    anchor, _ = select_band(model, k0, band, force)
    H = model.real_space(mask)
    traj = evolve(H, mask, force, psi0, duration, dt, k0=k0, record_every=record_every)
    rec = reconstruct_spectrum(traj, anchor)
    return DriveResult(traj, rec, anchor, exact_dominant_band(model, traj.k))
