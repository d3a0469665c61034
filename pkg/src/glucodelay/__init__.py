"""Glucose-insulin delay model toolkit: nonlinearities, equilibrium and linearization,
limiting interval map, characteristic roots, DDE integration and experiment harnesses."""

__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, GlucodelayError, IntegrationError,
                     InterpolationError, LinearizationError, MapError, ModelError)
from .functions import (FunctionSpec, HypothesisReport, make_f4_arctan, make_Fa, make_Fb,
                        make_function, validate_hypotheses)
from .model import (Equilibrium, LinearCoeffs, ModelConfig, equilibrium_residual, linearize,
                    rhs, solve_equilibrium, translate_to_zero)
from .intervalmap import MapAnalysis, analyze_map, classify_de_solution, phi
from .chareq import EigenReport, char_value, eigen_report, leading_pair
from .ddesim import InitialData, IntegratorOptions, Trajectory, integrate, self_convergence
from .analysis import OscillationReport, SweepResult, multistability_census, oscillation_report
