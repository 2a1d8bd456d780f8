"""Pseudospectral lab for iu_t + Δu + μ|x|^{-b}|u|^α u = 0."""
__version__ = "0.1.0"

from .exponents import (AdmissiblePair, InfeasibleSystem, ParameterError, ProblemParams,  # noqa: F401
                        alpha_max, classify, critical_index, is_admissible, strichartz_feasible)
from .spectral import Field, Grid, Trajectory, gaussian, lp_norm, sobolev_norm  # noqa: F401
from .weights import PoleError, eval_weight, riesz_constant, verify_hormander  # noqa: F401
from .propagator import (DomainError, free_evolve, h_asymptotic, h_function,  # noqa: F401
                         weight_evolution)
from .duhamel import DivergenceReport, DuhamelConfig, duhamel_term, refinement_study  # noqa: F401
from .evolve import IntegratorControls, blowup_rate, run, strang_step  # noqa: F401
from .ineq_lab import RatioReport, family_sweep, standard_family  # noqa: F401
