"""Arrival-time operators for a free quantum particle on a momentum grid.

Eigenstate families (Aharonov-Bohm, Kijowski-Delgado-Muga, the |x|-based
variants, and the current-based self-adjoint operator), their arrival-time
probability distributions, operator matrices with hermiticity/commutator
checks, and measurement-model simulations (half-line propagation, sequential
window measurements, crossing probabilities, the small-time current law).
"""

from .numerics import (
    GridSpec,
    PhysConsts,
    bessel_j,
    bessel_j_deriv,
    gamma_fn,
    integrate,
    simpson_weights,
)
from .states import (
    GaussianSpec,
    Representation,
    WaveFunction,
    centered_position_grid,
    conjugate_position_grid,
    derivative_at_origin,
    make_gaussian,
    make_reflected_state,
    momentum_moments,
    reflected_position_state,
    to_momentum,
    to_position,
    value_at_origin,
)
from .operators import (
    Distribution,
    EigenFamily,
    OperatorKind,
    OperatorMatrix,
    build_operator,
    commutator,
    completeness_check,
    current_expectation,
    distribution,
    dwell_low_momentum_check,
    eigenstate,
    eigenstate_values,
    hermiticity_defect,
    kijowski_distribution,
    kinetic_energy_density,
    new_low_momentum_slope,
    overlap,
    solve_eigen_ode,
)
from .measurement import (
    CrossingResult,
    CurrentLawFit,
    MeasurementChain,
    Propagator,
    WindowSpec,
    chain_final_state,
    classical_arrival,
    classical_current_moment,
    classical_stopwatch,
    conditional_distribution,
    crossing_probability,
    halfline_grid_points,
    halfline_propagate,
    make_zeno_chain,
    sequential_probability,
    small_time_current_law,
    window_project,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "PhysConsts",
    "bessel_j",
    "bessel_j_deriv",
    "gamma_fn",
    "integrate",
    "simpson_weights",
    "GaussianSpec",
    "Representation",
    "WaveFunction",
    "centered_position_grid",
    "conjugate_position_grid",
    "derivative_at_origin",
    "make_gaussian",
    "make_reflected_state",
    "momentum_moments",
    "reflected_position_state",
    "to_momentum",
    "to_position",
    "value_at_origin",
    "Distribution",
    "EigenFamily",
    "OperatorKind",
    "OperatorMatrix",
    "build_operator",
    "commutator",
    "completeness_check",
    "current_expectation",
    "distribution",
    "dwell_low_momentum_check",
    "eigenstate",
    "eigenstate_values",
    "hermiticity_defect",
    "kijowski_distribution",
    "kinetic_energy_density",
    "new_low_momentum_slope",
    "overlap",
    "solve_eigen_ode",
    "CrossingResult",
    "CurrentLawFit",
    "MeasurementChain",
    "Propagator",
    "WindowSpec",
    "chain_final_state",
    "classical_arrival",
    "classical_current_moment",
    "classical_stopwatch",
    "conditional_distribution",
    "crossing_probability",
    "halfline_grid_points",
    "halfline_propagate",
    "make_zeno_chain",
    "sequential_probability",
    "small_time_current_law",
    "window_project",
    "__version__",
]
