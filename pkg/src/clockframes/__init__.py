"""Relational quantum clocks: conditional states, effective Hamiltonians and their (non-)Hermiticity."""

from .clocks import (
    ClockModel,
    TimeOperator,
    commutator_identity_residual,
    function_of_time,
    gaussian_time_probe,
    generator_residual,
    make_custom_clock,
    make_gaussian_clock,
    make_ideal_clock,
    time_operator,
)
from .constraint import (
    ConditionalState,
    JointState,
    assemble_physical_state,
    condition_at,
    condition_on_time,
    constraint_residual,
    derivation_residual,
    nearest_physical_state,
    physical_inner_product,
    solve_physical_states,
)
from .dynamics import (
    EffectiveHamiltonian,
    Trajectory,
    analytic_gaussian_norm,
    effective_hamiltonian,
    effective_hamiltonian_ideal_timeparam,
    evolve,
    gaussian_wavepacket,
    generalized_equation_residual,
    normalized_expectation,
    time_dilation_rate,
)
from .errors import *  # noqa: F401,F403
from .metric import MetricReport, find_metric, metric_norm_trajectory
from .operators import (
    Ket,
    Operator,
    SpaceLayout,
    commutator,
    embed,
    hermiticity_defect,
    identity,
    inverse,
    ket_product,
    matrix_exponential,
    partial_inner,
    tensor_product,
)
from .scenarios import (
    PhysicalConstants,
    Scenario,
    add_external_clock,
    add_spectator,
    build_accelerated,
    build_gravitational,
    build_time_parametrized,
    interaction_kernel,
    make_particle,
    position_profile,
    potential_profile,
    time_profile,
)

__version__ = "0.1.0"
