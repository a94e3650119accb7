"""Travelling waves of the generalized KdV equation u_t + u_xxx + a(u) u_x = 0.

Submodules: ``expr`` (nonlinearity expressions), ``geometry`` (jet-space vector
fields and forms), ``cascade`` (H1, H2, R, H3 quadratures), ``profile``
(turning points and profiles), ``catalog`` (closed-form solutions),
``verify`` (residual and conservation checks), ``evolve`` (spectral PDE
solver) and ``cli``.
"""

from .cascade import CascadeConfig, build_cascade, gauge_shift_check, h3, radicand
from .catalog import get_entry, list_catalog
from .errors import (BlowUpError, ConstraintError, DomainError, ExprSyntaxError, GKdVError,
                     ProfileError, QuadratureError, UnboundParameterError)
from .evolve import SpectralGrid, evolve_gkdv, shape_error, soliton_state
from .expr import evaluate, evaluate_dual, parse, pretty
from .profile import find_turning_points, integrate_profile, to_travelling_wave
from .verify import VerifyConfig, full_report

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "CascadeConfig", "ConstraintError", "DomainError", "ExprSyntaxError", "GKdVError",
    "ProfileError", "QuadratureError", "SpectralGrid", "UnboundParameterError", "VerifyConfig",
    "build_cascade", "evaluate", "evaluate_dual", "evolve_gkdv", "find_turning_points", "full_report",
    "gauge_shift_check", "get_entry", "h3", "integrate_profile", "list_catalog", "parse", "pretty",
    "radicand", "shape_error", "soliton_state", "to_travelling_wave",
]
