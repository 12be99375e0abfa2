"""Exact symbolic toolkit for exterior differential systems.

Core layers: canonical rational expressions (expr), exterior algebra over
declared coframes (forms), linear Pfaffian analysis with Cartan's test
(pfaffian), the hyperbolic Monge-Ampere layer (monge), coordinate models and
golden verification scenarios (casei, scenarios), and elimination replays
(reductions).  The cli module exposes all of it as a command-line tool.
"""

__version__ = "0.1.0"

from .expr import Context, Expr
from .parse import parse_expr, ParseError
from .derivation import DerivationTable
from .forms import Coframe, Form, StructureRules, UNKNOWN, ext_d, reduce_mod, wedge

__all__ = [
    "Context",
    "Expr",
    "parse_expr",
    "ParseError",
    "DerivationTable",
    "Coframe",
    "Form",
    "StructureRules",
    "UNKNOWN",
    "ext_d",
    "reduce_mod",
    "wedge",
    "__version__",
]
