"""Interaction polynomials, derived nonlinearities and structural checks."""
from .parser import ParseError, parse_poly
from .polynomial import InteractionPoly, Monomial, QQi, to_fraction
from .structure import (
    HypothesisReport,
    build_fk,
    check_gauge,
    check_homogeneity,
    check_mass_resonance,
    check_structure,
    gauge_defects,
    sigma_residual,
    solve_sigma,
)
from .systems import (
    BUILTINS,
    ConfigError,
    DerivedNonlinearity,
    ScalarCubic,
    SystemParams,
    builtin,
    load_system,
    system_from_dict,
)

__all__ = [
    "BUILTINS", "ConfigError", "DerivedNonlinearity", "HypothesisReport", "InteractionPoly",
    "Monomial", "ParseError", "QQi", "ScalarCubic", "SystemParams", "build_fk", "builtin",
    "check_gauge", "check_homogeneity", "check_mass_resonance", "check_structure",
    "gauge_defects", "load_system", "parse_poly", "sigma_residual", "solve_sigma",
    "system_from_dict", "to_fraction",
]
