"""Relativistic Vlasov-Maxwell with a radiation-reaction force.

Numerical companion to the global regularity argument for the
radiation-damped relativistic Vlasov-Maxwell system: the force and its
sign conditions, characteristic tracing with density transport, a 1D3V
full-f particle-in-cell solver, moment bounds, light-cone kernels and
operators, and the scalar ODE lemmas that close the estimates.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, IntegrationError, ParameterError  # noqa: E402
from .force import FieldSample, ForceParams, min_admissible_A, total_force  # noqa: E402

__all__ = [
    "__version__", "ConfigError", "ConvergenceError", "IntegrationError", "ParameterError",
    "FieldSample", "ForceParams", "min_admissible_A", "total_force",
]
