"""Recursive predictive distributions and convex combinations of kernels."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from predlab import rng
from predlab.measure import DiscreteMeasure, TestFunction
from predlab.processes.base import (
    SERIES_HORIZON, Batch, Decision, Flags, KernelSpec, ProcessModel, SequenceSpec,
    as_index_array, discrete_draw, finite_values, series_converges,
)

#: Number of q terms cached for sampling and enumeration.
_Q_CACHE = 1 << 16


@dataclass(frozen=True, eq=False)
class RecursiveModel(ProcessModel):
    """Predictive updated by ``alpha_{n+1} = q_n alpha_n + (1 - q_n) K_n(X_{n+1}, .)``.

    With ``mixture`` set, ``q`` is derived from the weights ``d``:
    ``q_0 = 0`` and ``q_n = D_n / D_{n+1}`` with ``D_n = d_0 + ... + d_{n-1}``,
    so that ``alpha_n`` is the ``d``-weighted average of the kernel rows.
    Kernel ``K_n`` is ``kernels[min(n, len(kernels) - 1)]``.
    """

    q: SequenceSpec
    kernels: tuple[KernelSpec, ...]
    initial: DiscreteMeasure
    mixture: bool = False
    id: str = "recursive_predictive"

    @property
    def citation(self):
        if self.mixture:
            return "convex combination of kernels: q_n = D_n/D_{n+1}"
        return "recursive predictive: alpha_{n+1} = q_n alpha_n + (1-q_n) K_n(X_{n+1}, .)"

    @property
    def space(self):
        return self.initial.space

    @property
    def alphabet(self) -> np.ndarray:
        return np.asarray(self.space.alphabet)

    @cached_property
    def initial_vector(self) -> np.ndarray:
        return np.array([self.initial.mass(a) for a in self.alphabet])

    @property
    def params(self):
        return {"q" if not self.mixture else "d": self.q.as_dict(),
                "kernels": [k.as_dict() for k in self.kernels],
                "initial": {"atoms": self.initial.atoms.tolist(),
                            "weights": self.initial.weights.tolist()}}

    def q_terms(self, stop: int) -> np.ndarray:
        """``q_0, ..., q_{stop-1}``."""
        if not self.mixture:
            return self.q.terms(stop)
        log_d = self.q.log_terms(stop)
        log_cum = np.logaddexp.accumulate(log_d)  # log D_{n+1}
        out = np.zeros(stop)
        out[1:] = np.exp(log_cum[:-1] - log_cum[1:])
        return out

    @cached_property
    def _q(self) -> np.ndarray:
        return self.q_terms(_Q_CACHE)

    def _q_at(self, n: int) -> float:
        return float(self._q[n]) if n < _Q_CACHE else float(self.q_terms(n + 1)[n])

    def kernel(self, n: int) -> KernelSpec:
        return self.kernels[min(n, len(self.kernels) - 1)]

    @cached_property
    def _identity_kernels(self) -> bool:
        return all(k.is_identity for k in self.kernels)

    @cached_property
    def qmc_summable(self) -> bool:
        """Whether ``sum_n (1 - q_n) < inf`` (decided numerically)."""
        return series_converges(1.0 - self.q_terms(SERIES_HORIZON))

    @property
    def flags(self):
        cid = self._identity_kernels
        exch = cid and (self.mixture or (
            self.q.kind == "reciprocal" and self.q.complement and self.q.shift > 1))
        as_ = Decision.CONVERGES if (cid or self.qmc_summable) else Decision.INCONCLUSIVE
        return Flags(
            is_exchangeable=exch, is_cid=cid, m_cid_order=0 if cid else None,
            is_stationary=exch, expected_star=as_, expected_as=as_, expected_asymp_exch=as_,
        )

    # sampling ---------------------------------------------------------------
    def _update(self, alpha: np.ndarray, idx: np.ndarray, t: int) -> np.ndarray:
        q = self._q_at(t)
        return q * alpha + (1.0 - q) * self.kernel(t).matrix[idx]

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        u = rng.uniforms(seeds, np.arange(1, n + 1))
        alpha = np.tile(self.initial_vector, (len(seeds), 1))
        out = np.empty((len(seeds), n))
        for t in range(n):
            idx = discrete_draw(u[:, t], np.cumsum(alpha, axis=1))
            out[:, t] = self.alphabet[idx]
            alpha = self._update(alpha, idx, t)
        return Batch(seeds, out)

    def predictive_trajectory(self, values: np.ndarray, ns) -> np.ndarray:
        """``alpha_n`` as probability vectors, shape ``(P, len(ns), |alphabet|)``."""
        ns = as_index_array(ns)
        values = np.atleast_2d(values)
        idx = np.searchsorted(self.alphabet, values)
        alpha = np.tile(self.initial_vector, (len(values), 1))
        out = np.empty((len(values), len(ns), len(self.alphabet)))
        want = {}
        for j, n in enumerate(ns):
            want.setdefault(int(n), []).append(j)
        top = int(ns.max()) if len(ns) else 0
        for t in range(top + 1):
            if t in want:
                out[:, want[t]] = alpha[:, None]
            if t < top:
                alpha = self._update(alpha, idx[:, t], t)
        return out

    def predictive_measures(self, values: np.ndarray) -> list[DiscreteMeasure]:
        """``alpha_0, ..., alpha_n`` along one path, as measures."""
        traj = self.predictive_trajectory(np.asarray(values)[None], np.arange(len(values) + 1))[0]
        return [DiscreteMeasure(self.space, self.alphabet, np.clip(a, 0.0, None) / a.sum())
                for a in traj]

    def path_auxiliary(self, batch):
        return {"alpha": self.predictive_trajectory(batch.values, np.arange(batch.horizon + 1))}

    def predictive(self, batch, ns, f):
        fv = finite_values(f, self.alphabet)
        return self.predictive_trajectory(batch.values, ns) @ fv

    def increment(self, batch, ns, f):
        ns = as_index_array(ns)
        fv = finite_values(f, self.alphabet)
        traj = self.predictive_trajectory(batch.values, ns)
        out = np.empty(traj.shape[:2])
        for j, n in enumerate(ns):
            kf = self.kernel(int(n)).apply(fv)
            out[:, j] = (1.0 - self._q_at(int(n))) * (traj[:, j] @ kf - traj[:, j] @ fv)
        return out

    def marginal_expectation(self, t, f):
        if t == 1 or self._identity_kernels:
            return float(self.initial_vector @ finite_values(f, self.alphabet))
        return None

    # enumeration ------------------------------------------------------------
    def enum_initial(self):
        return [(tuple(self.initial_vector), 1.0)]

    def enum_step(self, state, t):
        alpha = np.asarray(state)
        q = self._q_at(t - 1)
        kern = self.kernel(t - 1).matrix
        out = []
        for i, a in enumerate(self.alphabet):
            if alpha[i] > 0:
                out.append((float(a), tuple(q * alpha + (1.0 - q) * kern[i]), float(alpha[i])))
        return out


def _check_kernels(kernels, initial: DiscreteMeasure) -> tuple[KernelSpec, ...]:
    if initial.space.kind != "finite":
        raise ValueError("recursive predictives need a finite alphabet")
    if list(initial.space.alphabet) != sorted(initial.space.alphabet):
        raise ValueError("alphabet labels must be listed in increasing order")
    kernels = tuple(kernels)
    if not kernels:
        raise ValueError("at least one kernel is required")
    for k in kernels:
        if k.alphabet != initial.space.alphabet:
            raise ValueError("kernel alphabet differs from the state space alphabet")
    return kernels


def recursive_predictive_model(q: SequenceSpec, kernels, initial: DiscreteMeasure
                               ) -> RecursiveModel:
    """Predictive recursion with a deterministic ``q_n`` sequence in (0, 1)."""
    kernels = _check_kernels(kernels, initial)
    if q.complement:
        # 1 - q_n in log space stays exact when q_n rounds to 1
        logs = replace(q, complement=False).log_terms(_Q_CACHE)
        ok = bool(np.all(np.isfinite(logs) & (logs < 0.0)))
    else:
        ok = q.check_range(0.0, 1.0, stop=_Q_CACHE)
    if not ok:
        raise ValueError("q_n must lie in the open interval (0, 1)")
    return RecursiveModel(q, kernels, initial)


def kernel_mixture_model(d: SequenceSpec, kernels, initial: DiscreteMeasure) -> RecursiveModel:
    """``alpha_n = (1/D_n) sum_{i<n} d_i K_i(X_{i+1}, .)`` with ``alpha_0 = initial``."""
    kernels = _check_kernels(kernels, initial)
    if d.complement or not np.all(np.isfinite(d.log_terms(_Q_CACHE))):
        raise ValueError("mixture weights d_n must be positive")
    if not np.all(d.terms(min(_Q_CACHE, 171)) > 0):
        raise ValueError("mixture weights d_n must be positive")
    return RecursiveModel(d, kernels, initial, mixture=True, id="kernel_mixture")
