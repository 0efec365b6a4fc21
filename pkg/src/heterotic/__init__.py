"""Invariant-form computations for heterotic string systems on Lie groups and their quotients."""
from .algebroid import MetricPair, metric_from_parameters
from .exterior import Form, LieModel, d, parse_model, power, wedge
from .gauge import AlgebraForm, Connection, GaugeAlgebra, HolomorphicBundle, ReductionPath
from .hermitian import ComplexStructure, HermitianStructure, SUnStructure
from .models import load

__version__ = "0.1.0"

__all__ = [
    "AlgebraForm",
    "ComplexStructure",
    "Connection",
    "Form",
    "GaugeAlgebra",
    "HermitianStructure",
    "HolomorphicBundle",
    "LieModel",
    "MetricPair",
    "ReductionPath",
    "SUnStructure",
    "d",
    "load",
    "metric_from_parameters",
    "parse_model",
    "power",
    "wedge",
]
