"""Simulation and verification lab for predictive distributions of dependent sequences.

Submodules: :mod:`predlab.measure` (state spaces, test functions, measures,
BL distance), :mod:`predlab.processes` (model catalog), :mod:`predlab.predictive`
(exact predictives by closed form or enumeration), :mod:`predlab.diagnostics`
(convergence deciders), :mod:`predlab.scenarios` and :mod:`predlab.harness`
(registry, runs, files) and :mod:`predlab.cli`.
"""
from __future__ import annotations

__version__ = "0.1.0"
