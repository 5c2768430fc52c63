"""Exploration dynamics of untrained neural policies.

Simulates how randomly initialized feedforward policies move an agent
through state space: a fixed network yields ballistic, drift-dominated
trajectories with a certified quadratic error bound, while re-drawing the
network at every step yields diffusive, heavy-tailed wandering described
by the infinite-width kernel of the architecture.  Hybrid switching
between the two regimes is evaluated in a hallway-barrier environment.
"""

__version__ = "0.1.0"

from .policy import (
    Architecture,
    InitScheme,
    PolicyNet,
    empirical_lipschitz,
    forward,
    lipschitz_upper_bound,
    sample_policy,
)
from .nngp import (
    DiffusionConvention,
    KernelSpec,
    diffusion_coefficient,
    gp_sample_actions,
    kernel,
    kernel_matrix,
    mc_covariance,
)
from .env import EnvSpec, HallwaySpec, step, step_batch, lipschitz_constants
from .rollout import (
    Ensemble,
    ResetSchedule,
    RolloutMode,
    Trajectory,
    rollout_fixed,
    rollout_gp,
    rollout_hybrid,
    rollout_resample,
    rollout_stochastic_reset,
    run_ensemble,
)

__all__ = [
    "Architecture",
    "InitScheme",
    "PolicyNet",
    "sample_policy",
    "forward",
    "lipschitz_upper_bound",
    "empirical_lipschitz",
    "KernelSpec",
    "DiffusionConvention",
    "kernel",
    "diffusion_coefficient",
    "kernel_matrix",
    "gp_sample_actions",
    "mc_covariance",
    "EnvSpec",
    "HallwaySpec",
    "step",
    "step_batch",
    "lipschitz_constants",
    "RolloutMode",
    "ResetSchedule",
    "Trajectory",
    "Ensemble",
    "rollout_fixed",
    "rollout_resample",
    "rollout_gp",
    "rollout_hybrid",
    "rollout_stochastic_reset",
    "run_ensemble",
    "__version__",
]
