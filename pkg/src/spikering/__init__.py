"""Numerical toolkit for rings of concentrating spikes of -Δu + V u = u^p.

Ground state and interaction constants, the balancing condition, the reduced
circulant operator and its continuum limit, and the reduced energy landscape.
"""
__version__ = "0.1.0"

from ._accel import backend, set_backend
from .errors import *  # noqa: F401,F403
from .groundstate import (
    GroundStateProfile,
    InteractionFunction,
    ModelConstants,
    derive_constants,
    psi,
    psi_and_derivative,
    psi_log_derivative,
    solve_ground_state,
)
from .balance import BalanceResult, asymptotic_d, balance_sweep, solve_balance
from .configuration import (
    PerturbationVector,
    SpikeConfig,
    annulus_count,
    build_config,
    exp_sum_ratio,
    min_separation,
    norm_star,
)
from .reduced_linear import (
    ReducedOperator,
    SpectralData,
    build_T,
    gram_matrix,
    rotation_kernel,
    solve_constrained,
    solve_constrained_q1,
    spectrum,
)
from .continuum import ContinuumSolution, compare_discrete, green_G0, solve_continuum
from .potential import PotentialModel, check_decay, cond_m
from .energy import (
    EnergyReport,
    direct_energy,
    projected_error_frame,
    projected_error_leading,
    reduced_energy,
    reduced_gradient,
    scan_F,
    solve_reduced_q,
)
