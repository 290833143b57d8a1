"""Periodic pseudospectral lab for the modified Hunter-Saxton family

    u_t + u^p u_x = (p/2) D^{-1}(u^{p-1} u_x^2)

on the unit circle: Eulerian and flow-map solvers, time-Taylor series,
analytic scale norms, and a property-verification CLI.
"""
from .errors import (
    BreakdownError,
    CFLError,
    InitSyntaxError,
    InsufficientDataError,
    MHSError,
    PreconditionError,
    ResolutionError,
    SizeMismatchError,
)
from .initcond import InitExpr, parse_init, realize
from .spectral import Diffeo, ModelParams, SpectralField

__version__ = "0.1.0"

__all__ = [
    "BreakdownError", "CFLError", "Diffeo", "InitExpr", "InitSyntaxError",
    "InsufficientDataError", "MHSError", "ModelParams", "PreconditionError",
    "ResolutionError", "SizeMismatchError", "SpectralField", "parse_init", "realize",
]
