"""Fast invariant suite run by ``gdse check``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import gbz
from .lattice import GeometrySpec, HoppingParams, Momentum, build_periodic, build_real_space, bloch_grid, make_geometry
from .spectral import fractional_dimension, symmetry_residuals


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool


def multiset_distance(a, b) -> float:
    """Largest pair distance under the optimal matching of two equal-size multisets."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if a.shape != b.shape:
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def random_momenta(n: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    return [Momentum(kx, ky) for kx, ky in rng.uniform(-math.pi, math.pi, size=(n, 2))]


def bloch_consistency(params: HoppingParams, L: int = 6) -> float:
    ev = np.linalg.eigvals(build_periodic(params, L).toarray())
    k = 2 * math.pi * np.arange(L) / L
    eb = np.linalg.eigvals(bloch_grid(params, k[:, None], k[None, :]))
    return multiset_distance(ev, eb)


def char_poly_mismatch(n: int = 100, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        ts, tp, tsp, tq = rng.uniform(-2, 2, 4)
        p = HoppingParams(ts, tp, tsp, tq, gamma=rng.uniform(0, 1))
        km = rng.uniform(-math.pi, math.pi)
        E = complex(*rng.normal(size=2))
        a, b = gbz.char_poly(p, km, E), gbz.char_poly_expanded(p, km, E)
        worst = max(worst, max(abs(a[n_] - b[n_]) for n_ in range(-3, 4)))
    return worst


def invariant_suite(params: HoppingParams) -> list:
    out = []

    def add(name, value, threshold):
        out.append(CheckResult(name, float(value), threshold, bool(value < threshold)))

    if params.delta_y == 0:
        res = symmetry_residuals(params, random_momenta(1000))
        add("mirror_residual", res["mirror_residual"], 1e-13)
        add("transpose_mirror_residual", res["transpose_mirror_residual"], 1e-13)
        add("char_poly_mismatch", char_poly_mismatch(), 1e-12)
    add("bloch_vs_periodic", bloch_consistency(params), 1e-10)
    herm = params.replace(gamma=0.0, delta_y=0.0)
    H = build_real_space(herm, make_geometry(GeometrySpec("rotated", 9, math.pi / 4)))
    add("hermitian_limit", abs(H - H.conj().T).max(), 1e-14)
    n = 64
    fd_err = max(
        abs(fractional_dimension(np.full(n, n**-0.5), n) - 2),
        abs(fractional_dimension(np.r_[np.full(8, 8**-0.5), np.zeros(n - 8)], n) - 1),
        abs(fractional_dimension(np.r_[1.0, np.zeros(n - 1)], n) - 0),
    )
    add("fd_calibration", fd_err, 1e-12)
    return out
