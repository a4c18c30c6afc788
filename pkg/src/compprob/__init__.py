"""Exact computable probability: ideal measures, staged valuations and
integrals, binary representations and randomness tests."""
from __future__ import annotations

from .core import RatInterval, StagedLowerReal, StagedUpperReal, as_rational, fmt_rational
from .errors import BudgetExhausted, CompProbError
from .cms import CantorSpace, IdealBall, PointDescriptor, ProductSpace, UnitInterval, Verdict
from .measures import (
    IdealMeasure,
    MeasureDescriptor,
    bernoulli,
    integrate_lower,
    lebesgue_unit,
    prokhorov_exact,
    wasserstein_exact,
)
from .binaryrep import BinaryRep, cell_measure, decode, encode, lebesgue_rep
from .randomness import IntegralTest, MLTest, finite_universal, integral_to_ml, ml_to_integral

__all__ = [
    "BinaryRep",
    "BudgetExhausted",
    "CantorSpace",
    "CompProbError",
    "IdealBall",
    "IdealMeasure",
    "IntegralTest",
    "MLTest",
    "MeasureDescriptor",
    "PointDescriptor",
    "ProductSpace",
    "RatInterval",
    "StagedLowerReal",
    "StagedUpperReal",
    "UnitInterval",
    "Verdict",
    "as_rational",
    "bernoulli",
    "cell_measure",
    "decode",
    "encode",
    "finite_universal",
    "fmt_rational",
    "integral_to_ml",
    "integrate_lower",
    "lebesgue_rep",
    "lebesgue_unit",
    "ml_to_integral",
    "prokhorov_exact",
    "wasserstein_exact",
]

__version__ = "0.1.0"
