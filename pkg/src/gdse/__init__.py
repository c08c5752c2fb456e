"""Geometry-dependent skin effect in a lossy two-orbital optical lattice.

Builders for the sp-ladder Hamiltonian on arbitrary open geometries, dense
non-Hermitian spectra with localization diagnostics, oblique generalized
Brillouin zones, driven wave-packet dynamics and a Wannier-orbital fit of
the couplings.
"""

__version__ = "0.1.0"

from .errors import GdseError
from .lattice import (
    MAIN_PARAMS,
    GeometryMask,
    GeometrySpec,
    HoppingParams,
    Momentum,
    boundary_shell,
    build_bloch,
    build_real_space,
    make_geometry,
)

__all__ = [
    "MAIN_PARAMS",
    "GdseError",
    "GeometryMask",
    "GeometrySpec",
    "HoppingParams",
    "Momentum",
    "boundary_shell",
    "build_bloch",
    "build_real_space",
    "make_geometry",
]
