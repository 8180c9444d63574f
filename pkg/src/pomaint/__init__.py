"""pomaint: maintenance optimization for a two-component system in which a
fully monitored component modulates the degradation of a partially observed
one. Simulation, covariate-modulated Baum-Welch estimation, belief-grid POMDP
solving, and threshold-policy benchmarking."""

__version__ = "0.1.0"

from .baselines import (
    GapRecord,
    Policy1Rule,
    Policy2Rule,
    gap_percent,
    solve_policy1,
    solve_policy2,
    solve_policy3,
)
from .estimate import (
    CovariateHMM,
    FitResult,
    MultiStartResult,
    Posteriors,
    estimate_q_matrix,
    fit,
    forward_backward,
    multi_start_fit,
)
from .model import (
    CostStructure,
    SystemModel,
    read_costs,
    read_model,
    reset_belief,
    validate_model,
    write_costs,
    write_model,
)
from .orders import (
    OrderCertificate,
    check_assumptions,
    check_tp2,
    copositive_leq,
    fsd_leq,
    mlr_leq,
)
from .simulate import (
    Trajectory,
    TrajectorySet,
    read_trajectories,
    simulate_trajectories,
    write_trajectories,
)
from .solver import (
    BeliefGrid,
    BeliefGridSolver,
    PolicyMap,
    SolveResult,
    ValueFunction,
    bellman_backup,
    belief_update,
    evaluate_fixed_policy,
    observation_kernel,
    policy_structure_report,
    stage_cost,
    value_iteration,
)

__all__ = [name for name in dir() if not name.startswith("_")]
