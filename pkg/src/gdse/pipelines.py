"""Multi-stage analyses shared by the command line and the acceptance suite."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from .lattice import GeometryMask, GeometrySpec, HoppingParams, boundary_shell, build_real_space, make_geometry
from .spectral import ComplexSpectrum, analyze, average_density, bulk_band_mask, shell_indices

DYNAMICS_L = 60


@dataclass(frozen=True)
class GeometryReport:
    spec: GeometrySpec
    mask: GeometryMask
    shell: frozenset
    spectrum: ComplexSpectrum
    density: np.ndarray
    rho_b_mean: float
    n_boundary: int
    bulk: np.ndarray  # per-state bulk-band flag

    @property
    def n_cells(self) -> int:
        return len(self.mask)

    @property
    def median_fd_bulk(self) -> float:
        return float(np.median(self.spectrum.fractional_dimension[self.bulk]))


def geometry_report(
    params: HoppingParams,
    spec: GeometrySpec,
    depth: int = 2,
    dim_cap: int = 14000,
    bulk_delta: float = 0.1,
) -> GeometryReport:
    """Diagonalize one open geometry and collect the boundary diagnostics."""
    mask = make_geometry(spec)
    shell = frozenset(boundary_shell(mask, depth))
    spec_ = analyze(build_real_space(params, mask), mask, shell, dim_cap)
    density = average_density(spec_, mask)
    idx = shell_indices(mask, shell)
    return GeometryReport(
        spec=spec,
        mask=mask,
        shell=shell,
        spectrum=spec_,
        density=density,
        rho_b_mean=float(density[idx].sum()),
        n_boundary=int(np.sum(spec_.boundary_weight > 0.5)),
        bulk=bulk_band_mask(params, spec_.eigenvalues, delta=bulk_delta),
    )


def comparable_size(square_L: int, theta: float) -> int:
    """Bounding width that keeps the side of the rotated square equal to ``square_L``."""
    return int(round(square_L * (math.cos(theta) + math.sin(theta))))


def theta_geometry(square_L: int, theta: float) -> GeometrySpec:
    if theta == 0:
        return GeometrySpec("square", square_L)
    return GeometrySpec("rotated", comparable_size(square_L, theta), theta)


@dataclass(frozen=True)
class SplittingRun:
    theta: float
    force: np.ndarray
    result: dyn.DriveResult
    splitting: dyn.SplittingProfile


def splitting_run(
    params: HoppingParams,
    theta: float,
    force_mag: float = 0.25,
    k0=(-0.5 * math.pi, 0.0),
    sigma0: float = dyn.DEFAULT_SIGMA0,
    L: int = DYNAMICS_L,
    dt: float | None = None,
    record_every: int = 1,
) -> SplittingRun:
    """Drive along F = |F| (cos theta, sin theta) until Fx t = pi.

    Bloch oscillations are bulk dynamics, so the packet runs on a square
    lattice large enough that it never reaches an edge.
    """
    force = force_mag * np.array([math.cos(theta), math.sin(theta)])
    mask = make_geometry(GeometrySpec("square", L))
    duration = math.pi / force[0]
    res = dyn.run_drive(params, mask, k0, force, duration, sigma0=sigma0, dt=dt, record_every=record_every)
    return SplittingRun(theta, force, res, dyn.degeneracy_splitting(res.reconstruction))


def theta_sweep(
    params: HoppingParams,
    thetas,
    square_L: int = 25,
    depth: int = 2,
    with_dynamics: bool = True,
    force_mag: float = 0.25,
    k0=(-0.5 * math.pi, 0.0),
    sigma0: float = dyn.DEFAULT_SIGMA0,
    threads: int = 1,
    dim_cap: int = 14000,
) -> list:
    """Boundary density share and dynamical splitting for each geometry angle."""

    def one(theta):
        rep = geometry_report(params, theta_geometry(square_L, theta), depth, dim_cap)
        row = {
            "theta": float(theta),
            "L": rep.spec.L,
            "n_cells": rep.n_cells,
            "rho_b_mean": rep.rho_b_mean,
            "n_boundary": rep.n_boundary,
            "max_splitting": float("nan"),
        }
        if with_dynamics:
            row["max_splitting"] = splitting_run(params, theta, force_mag, k0, sigma0).splitting.max
        return row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, thetas))
    return [one(t) for t in thetas]
