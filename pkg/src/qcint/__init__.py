"""Constructive Lebesgue integration of quasicontinuous functions.

Exact rational set algebra (multiintervals and multirectangles), function
descriptors carrying witnesses of quasicontinuity, integrals with certified
error bounds, Tietze extensions, and checkers for the classical convergence
and reduction theorems.
"""

from .catalog import catalog, parse_function, parse_sequence, parse_set
from .fubini import fubini_check, iterated_integrate, section_identity_check, tonelli_gate
from .lebesgue import (IntegralResult, exterior_interior_measure, integrate, integrate_bounded,
                       integrate_general, integrate_over_set, is_summable, measure)
from .qc import QCFunction, QCSequence
from .rational import format_rational, parse_extended
from .sets import Interval, Multirectangle, Rectangle, Topology, union_measure

__all__ = [
    "IntegralResult", "Interval", "Multirectangle", "QCFunction", "QCSequence", "Rectangle", "Topology",
    "catalog", "exterior_interior_measure", "format_rational", "fubini_check", "integrate", "integrate_bounded",
    "integrate_general", "integrate_over_set", "is_summable", "iterated_integrate", "measure", "parse_extended",
    "parse_function", "parse_sequence", "parse_set", "section_identity_check", "tonelli_gate", "union_measure",
]

__version__ = "0.1.0"
