"""Attach a lagged sub-filtration ``G_n = F_{n - g(n)}`` to a catalog model."""
from __future__ import annotations

from dataclasses import dataclass

from predlab.processes.base import Batch, LagSpec, ProcessModel


@dataclass(frozen=True, eq=False)
class LaggedModel(ProcessModel):
    """Wrapper that delegates to ``inner`` and adds the sub-filtration predictive."""

    inner: ProcessModel
    lag: LagSpec

    @property
    def id(self):
        return f"{self.inner.id}_lagged"

    @property
    def space(self):
        return self.inner.space

    @property
    def flags(self):
        return self.inner.flags

    @property
    def citation(self):
        return "lagged sub-filtration G_n = F_{n-g(n)}; " + self.inner.citation

    @property
    def params(self):
        return {"inner": self.inner.params, "lag": self.lag.as_dict()}

    @property
    def predictive_method(self):
        return self.inner.predictive_method

    @property
    def enum_lookahead(self):
        return self.inner.enum_lookahead

    @property
    def supports_enumeration(self):
        return self.inner.supports_enumeration

    def method_for(self, f):
        return self.inner.method_for(f)

    def sample_batch(self, seeds, n) -> Batch:
        return self.inner.sample_batch(seeds, n)

    def path_auxiliary(self, batch):
        return self.inner.path_auxiliary(batch)

    def predictive(self, batch, ns, f):
        return self.inner.predictive(batch, ns, f)

    def increment(self, batch, ns, f):
        return self.inner.increment(batch, ns, f)

    def sub_predictive(self, batch, ns, f):
        """``beta_n(f) = E{f(X_{n+1}) | F_{n - g(n)}}`` per path and index."""
        return self.inner.lagged_predictive(batch, ns, f, self.lag)

    def lagged_predictive(self, batch, ns, f, lag):
        return self.inner.lagged_predictive(batch, ns, f, lag)

    def marginal_expectation(self, t, f):
        return self.inner.marginal_expectation(t, f)

    def enum_initial(self):
        return self.inner.enum_initial()

    def enum_step(self, state, t):
        return self.inner.enum_step(state, t)


def lagged_filtration_model(inner: ProcessModel, lag: LagSpec) -> LaggedModel:
    """``inner`` observed through ``G_n = F_{n - g(n)}`` (trivial when ``n <= g(n)``)."""
    if not inner.space.is_finite:
        raise ValueError("lagged filtrations need a finite alphabet")
    if not lag.validate():
        raise ValueError(f"lag {lag} violates g(x) <= x, monotonicity or n^-2 sum g -> 0")
    return LaggedModel(inner, lag)
