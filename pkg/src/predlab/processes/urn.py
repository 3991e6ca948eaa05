"""Generalized Pólya urn with random, finitely supported reinforcement."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from predlab import rng
from predlab.measure import StateSpace, TestFunction
from predlab.processes.base import (
    Batch, Decision, Flags, ProcessModel, as_index_array, discrete_draw,
)

_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class Reinforcement:
    """Law of ``(B_n, R_n)``: i.i.d. over n, finite support, independent of the draw."""

    support: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        support = tuple((float(b), float(r)) for b, r in self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support or len(support) != len(weights):
            raise ValueError("reinforcement needs matching support and weights")
        if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError("reinforcement weights must be a probability vector")
        if any(b < 0 or r < 0 for b, r in support):
            raise ValueError("reinforcement counts must be non-negative")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def degenerate(cls, b: float = 1.0, r: float = 1.0) -> "Reinforcement":
        return cls(((b, r),), (1.0,))

    @property
    def mean_b(self) -> float:
        return math.fsum(w * b for (b, _), w in zip(self.support, self.weights))

    @property
    def mean_r(self) -> float:
        return math.fsum(w * r for (_, r), w in zip(self.support, self.weights))

    @property
    def is_degenerate(self) -> bool:
        return sum(w > 0 for w in self.weights) == 1

    @property
    def always_equal(self) -> bool:
        return all(b == r for (b, r), w in zip(self.support, self.weights) if w > 0)

    def as_dict(self):
        return {"support": [list(s) for s in self.support], "weights": list(self.weights)}


@dataclass(frozen=True, eq=False)
class PolyaUrnModel(ProcessModel):
    """``X_n = (B_n, R_n, Y_n)``; ``Y_n`` indicates a black draw at time n."""

    b: float
    r: float
    reinforcement: Reinforcement
    id: str = "polya_urn"
    citation = "generalized Polya urn: P(Y_{n+1}=1|past) = (b+sum B_iY_i)/(b+r+sum(B_iY_i+R_i(1-Y_i)))"

    @property
    def space(self):
        bs = sorted({b for b, _ in self.reinforcement.support})
        rs = sorted({r for _, r in self.reinforcement.support})
        return StateSpace.product(StateSpace.finite(bs), StateSpace.finite(rs),
                                  StateSpace.finite((0.0, 1.0)))

    @property
    def flags(self):
        rf = self.reinforcement
        cid = rf.always_equal
        return Flags(
            is_exchangeable=cid and rf.is_degenerate, is_cid=cid,
            m_cid_order=0 if cid else None, is_stationary=cid and rf.is_degenerate,
            expected_star=Decision.CONVERGES, expected_as=Decision.CONVERGES,
            expected_asymp_exch=Decision.CONVERGES,
        )

    @property
    def params(self):
        return {"b": self.b, "r": self.r, "reinforcement": self.reinforcement.as_dict()}

    def _support(self):
        return np.asarray(self.reinforcement.support), np.asarray(self.reinforcement.weights)

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        steps = np.arange(1, n + 1)
        # step-major layout keeps the per-step updates contiguous
        uy = rng.uniforms(seeds, steps, slot=0).T.copy()
        sup, _ = self._support()
        if len(sup) == 1:
            bb = np.full(uy.shape, sup[0, 0])
            rr = np.full(uy.shape, sup[0, 1])
        else:
            u = rng.uniforms(seeds, steps, slot=1).T
            idx = discrete_draw(u.ravel(), np.cumsum(self.reinforcement.weights)).reshape(uy.shape)
            bb, rr = sup[idx, 0], sup[idx, 1]
        y = np.empty_like(uy)
        black = np.full(len(seeds), float(self.b))
        total = np.full(len(seeds), float(self.b + self.r))
        for t in range(n):
            y[t] = (uy[t] < black / total).astype(float)
            add_b = bb[t] * y[t]
            black += add_b
            total += add_b + rr[t] * (1.0 - y[t])
        return Batch(seeds, np.stack([bb.T, rr.T, y.T], axis=-1))

    def black_probability(self, values: np.ndarray, ns) -> np.ndarray:
        """``P(Y_{n+1} = 1 | F_n)`` per path (rows of ``values``) and index n."""
        ns = as_index_array(ns)
        bb, rr, y = values[..., 0], values[..., 1], values[..., 2]
        add_b = bb * y
        black = self.b + np.concatenate([np.zeros((len(y), 1)), np.cumsum(add_b, axis=1)], axis=1)
        total = self.b + self.r + np.concatenate(
            [np.zeros((len(y), 1)), np.cumsum(add_b + rr * (1.0 - y), axis=1)], axis=1)
        return black[:, ns] / total[:, ns], black[:, ns], total[:, ns]

    def _f_by_colour(self, f: TestFunction):
        sup, w = self._support()
        pts1 = np.column_stack([sup, np.ones(len(sup))])
        pts0 = np.column_stack([sup, np.zeros(len(sup))])
        return float(w @ f(pts0)), float(w @ f(pts1))

    def predictive(self, batch, ns, f):
        p, _, _ = self.black_probability(batch.values, ns)
        f0, f1 = self._f_by_colour(f)
        return f0 + p * (f1 - f0)

    def increment(self, batch, ns, f):
        p, black, total = self.black_probability(batch.values, ns)
        f0, f1 = self._f_by_colour(f)
        sup, w = self._support()
        nxt = np.zeros_like(p)
        for (bj, rj), wj in zip(sup, w):
            nxt += wj * (p * (black + bj) / (total + bj) + (1.0 - p) * black / (total + rj))
        return (f1 - f0) * (nxt - p)

    def marginal_expectation(self, t, f):
        if t == 1 or self.reinforcement.always_equal:
            f0, f1 = self._f_by_colour(f)
            return f0 + self.b / (self.b + self.r) * (f1 - f0)
        return None

    def enum_initial(self):
        return [((float(self.b), float(self.b + self.r)), 1.0)]

    def enum_step(self, state, t):
        black, total = state
        p = black / total
        out = []
        for (bj, rj), wj in zip(self.reinforcement.support, self.reinforcement.weights):
            if wj == 0:
                continue
            out.append(((bj, rj, 1.0), (black + bj, total + bj), wj * p))
            out.append(((bj, rj, 0.0), (black, total + rj), wj * (1.0 - p)))
        return out


def polya_urn_model(b: float = 1.0, r: float = 1.0,
                    reinforcement: Reinforcement | None = None) -> PolyaUrnModel:
    """Urn with ``b`` black and ``r`` red balls; default unit reinforcement (classical Pólya)."""
    if not (b > 0 and r > 0):
        raise ValueError("initial ball counts must be positive")
    reinforcement = reinforcement or Reinforcement.degenerate()
    if abs(reinforcement.mean_b - reinforcement.mean_r) > _MEAN_TOL:
        raise ValueError("reinforcement must satisfy E(B) = E(R)")
    if reinforcement.mean_b <= 0:
        raise ValueError("reinforcement must have E(B) > 0")
    return PolyaUrnModel(float(b), float(r), reinforcement)
