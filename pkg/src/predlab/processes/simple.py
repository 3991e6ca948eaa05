"""I.i.d. sequences on a finite alphabet (the trivially exchangeable baseline)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from predlab import rng
from predlab.measure import DiscreteMeasure, TestFunction, integrate
from predlab.processes.base import (
    Batch, Decision, Flags, LagSpec, ProcessModel, as_index_array, discrete_draw,
)

_IID_FLAGS = Flags(
    is_exchangeable=True, is_cid=True, m_cid_order=0, is_stationary=True,
    expected_star=Decision.CONVERGES, expected_as=Decision.CONVERGES,
    expected_asymp_exch=Decision.CONVERGES, pairwise_independent=True,
)


@dataclass(frozen=True, eq=False)
class IIDModel(ProcessModel):
    base: DiscreteMeasure
    id: str = "iid"
    flags: Flags = _IID_FLAGS
    citation = "i.i.d. sequences: constant predictive, exchangeable"

    def __post_init__(self):
        if self.base.space.kind != "finite":
            raise ValueError("iid_model takes a measure on a finite alphabet")

    @property
    def space(self):
        return self.base.space

    @property
    def params(self):
        return {"atoms": self.base.atoms.tolist(), "weights": self.base.weights.tolist()}

    def sample_batch(self, seeds, n):
        u = rng.uniforms(seeds, np.arange(1, n + 1))
        idx = discrete_draw(u.ravel(), np.cumsum(self.base.weights)).reshape(u.shape)
        return Batch(np.asarray(seeds, dtype=np.uint64), self.base.atoms[idx])

    def predictive(self, batch, ns, f):
        ns = as_index_array(ns)
        return np.full((batch.n_paths, len(ns)), integrate(self.base, f))

    def increment(self, batch, ns, f):
        return np.zeros((batch.n_paths, len(as_index_array(ns))))

    def lagged_predictive(self, batch, ns, f, lag: LagSpec):
        return self.predictive(batch, ns, f)

    def marginal_expectation(self, t, f: TestFunction):
        return integrate(self.base, f)

    def enum_initial(self):
        return [(None, 1.0)]

    def enum_step(self, state, t):
        return [(float(a), None, float(w)) for a, w in zip(self.base.atoms, self.base.weights)]


def iid_model(base: DiscreteMeasure) -> IIDModel:
    """I.i.d. draws from ``base``; a point mass gives the deterministic model."""
    return IIDModel(base)
