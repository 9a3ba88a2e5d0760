"""Mimetic finite differences on periodic staggered grids.

Discrete GRAD, DIV and ADVEC operators whose weighted adjoints mirror the
continuous integration-by-parts identities, four conservative flow models
built from them, time integrators and a conformance auditor.
"""

from .grid import CellField, FaceField, GridMismatchError, StaggeredGrid, build_grid
from .laws import LawDomainError, StateLaw
from .models import ModelConfig, ModelState, energy, make_state, rhs
from .integrators import ConvergenceError, IntegratorConfig, step
from .audit import ConformanceReport, run_conformance

__all__ = [
    "CellField",
    "FaceField",
    "GridMismatchError",
    "StaggeredGrid",
    "build_grid",
    "LawDomainError",
    "StateLaw",
    "ModelConfig",
    "ModelState",
    "energy",
    "make_state",
    "rhs",
    "ConvergenceError",
    "IntegratorConfig",
    "step",
    "ConformanceReport",
    "run_conformance",
]
