"""Catalog of processes with seeded samplers, predictives and ground-truth flags."""
from predlab.processes.base import (
    Batch, Decision, Flags, KernelSpec, LagSpec, PathSample, ProcessModel, SequenceSpec,
    sample_path, series_converges,
)
from predlab.processes.counterexamples import (
    CLTModel, Innovation, MDependentModel, SinePairModel, TripleModel, clt_model,
    m_dependent_model, sine_pair_model, triple_model,
)
from predlab.processes.lagged import LaggedModel, lagged_filtration_model
from predlab.processes.recursive import (
    RecursiveModel, kernel_mixture_model, recursive_predictive_model,
)
from predlab.processes.simple import IIDModel, iid_model
from predlab.processes.urn import PolyaUrnModel, Reinforcement, polya_urn_model

__all__ = [
    "Batch", "CLTModel", "Decision", "Flags", "IIDModel", "Innovation", "KernelSpec",
    "LagSpec", "LaggedModel", "MDependentModel", "PathSample", "PolyaUrnModel",
    "ProcessModel", "RecursiveModel", "Reinforcement", "SequenceSpec", "SinePairModel",
    "TripleModel", "clt_model", "iid_model", "kernel_mixture_model", "lagged_filtration_model",
    "m_dependent_model", "polya_urn_model", "recursive_predictive_model", "sample_path",
    "series_converges", "sine_pair_model", "triple_model",
]
