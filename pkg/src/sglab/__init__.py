"""Numerical laboratory for Wick-ordered sine-Gordon measures on planar domains.

Modules: ``spectral`` (domains, eigenpairs, Green functions, mollifiers),
``gff`` (field sampling and mollified caches), ``wick`` (Wick exponentials and
tested cosines), ``bsde`` (Cole-Hopf and regression solvers, tilts, BMO
constants), ``coulomb`` (charge expansions, Ising/XOR identity and the
characteristic functional), ``config`` and ``cli``.
"""

from importlib.metadata import PackageNotFoundError, version

from . import bsde, coulomb, errors, gff, montecarlo, spectral, wick
from .bsde import (
    WickCosineTerminal,
    bmo_constants,
    catalog_functionals,
    cole_hopf_y0,
    epsilon_sweep,
    kappa,
    p_bar,
    reverse_holder_K,
    solve_bsde_regression,
    taylor_check,
    tilt_weights,
    tower_check,
)
from .coulomb import (
    ChargeConfiguration,
    char_functional,
    constants,
    interaction_energy,
    ising_npoint_halfplane,
    partition,
    q_n_moment,
    q_n_quadrature,
    xor_identity_check,
)
from .gff import MollifiedEigenCache, build_cache, field_value, sample_modes
from .montecarlo import MCEstimate
from .spectral import (
    SHARP_MOLLIFIER,
    STANDARD_MOLLIFIER,
    ConformalMap,
    DomainSpec,
    Mollifier,
    SpectralBasis,
    build_basis,
    green,
    green_halfplane,
    mollified_green,
)
from .wick import Angle, DensityWeight, TestFunction, bounds_ledger, tested_cosine, wick_cos, wick_sin

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.0.0"

del version, PackageNotFoundError

__all__ = [name for name in dir() if not name.startswith("_")]
