"""Iterative design, static checking, simulated deployment, runtime debugging
and safe evolution of component-based architectures."""

from .adl import parse, serialize
from .analysis import AnalysisReport, analyze
from .model import Architecture, canonicalize, validate

__version__ = "0.1.0"

__all__ = ["AnalysisReport", "Architecture", "analyze", "canonicalize", "parse", "serialize", "validate"]
