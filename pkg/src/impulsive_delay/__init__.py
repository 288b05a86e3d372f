"""Mild solutions of semilinear impulsive differential inclusions with infinite fading memory."""
from .config import RunConfig, load_config, load_shipped, parse_config
from .exceptions import (
    ConfigurationError,
    DomainError,
    EmptyFamilyError,
    HypothesisViolation,
    ImpulsiveDelayError,
    IntegrabilityError,
    MembershipError,
    NonconvergenceError,
)
from .optimizer import CostFunctional, evaluate_cost, optimize, sample_solution_set
from .phase_space import FadingWeight, History, PhaseSpaceConstants, StateSpace, seminorm
from .population import PopulationConfig, analytic_decay_oracle, build_instance, verify_hypotheses
from .solver import ImpulseMap, ProblemInstance, SolverConfig, Trajectory, residual, solve

__version__ = "0.1.0"
