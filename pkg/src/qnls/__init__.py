"""Radial toolkit for quadratic Schrodinger systems.

Submodules: ``nonlinearity`` (symbolic interaction polynomials and structural
checks), ``radial`` (grid, Laplacian, field I/O), ``functionals``,
``ground_state``, ``evolution``, ``virial``, ``concentration`` and ``cli``.
"""
from .nonlinearity import ConfigError, ParseError, SystemParams, builtin, parse_poly
from .radial import RadialField, RadialGrid

__version__ = "0.1.0"

__all__ = ["ConfigError", "ParseError", "RadialField", "RadialGrid", "SystemParams", "builtin", "parse_poly"]
