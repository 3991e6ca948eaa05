"""Shared types for the process catalog: flags, samples, sequences, kernels, lags."""
from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from typing import Any, Hashable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from predlab import rng
from predlab.errors import UnsupportedPredictive
from predlab.measure import DiscreteMeasure, StateSpace, TestFunction

#: Horizon used when a sequence property is decided numerically.
SERIES_HORIZON = 10**6


class Decision(str, enum.Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Flags:
    """Ground truth attached to a model.

    ``INCONCLUSIVE`` in an ``expected_*`` slot means "no ground truth known";
    the harness only scores conditions with a definite expectation.
    """

    is_exchangeable: bool
    is_cid: bool
    m_cid_order: int | None
    is_stationary: bool
    expected_star: Decision
    expected_as: Decision
    expected_asymp_exch: Decision
    pairwise_independent: bool = False

    def __post_init__(self):
        if self.is_exchangeable and not self.is_cid:
            raise ValueError("exchangeable sequences are c.i.d.")
        if self.is_cid and self.m_cid_order != 0:
            raise ValueError("c.i.d. sequences have m-c.i.d. order 0")
        if self.is_cid and self.expected_as is not Decision.CONVERGES:
            raise ValueError("c.i.d. sequences converge almost surely")
        if self.expected_as is Decision.CONVERGES and self.expected_star is Decision.DIVERGES:
            raise ValueError("a.s. convergence implies convergence in probability")

    def as_dict(self) -> dict[str, Any]:
        return {k: (str(v) if isinstance(v, Decision) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class Batch:
    """Paths sampled together: ``values`` has shape ``(P, n)`` or ``(P, n, dim)``."""

    seeds: np.ndarray
    values: np.ndarray
    auxiliary: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return len(self.seeds)

    @property
    def horizon(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PathSample:
    model_id: str
    seed: int
    values: np.ndarray
    auxiliary: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def as_batch(self) -> Batch:
        return Batch(np.array([self.seed], dtype=np.uint64), self.values[None],
                     {k: v[None] for k, v in self.auxiliary.items()})


# ---------------------------------------------------------------------------
# Deterministic sequences
# ---------------------------------------------------------------------------

_SEQ_KINDS = ("constant", "reciprocal_sqrt", "reciprocal", "geometric", "factorial", "table")


@dataclass(frozen=True)
class SequenceSpec:
    """Deterministic sequence ``a_0, a_1, ...`` (or ``1 - a_n`` with ``complement``).

    Kinds: ``constant(c)``, ``reciprocal_sqrt(shift)`` = 1/sqrt(n+shift),
    ``reciprocal(shift)`` = 1/(n+shift), ``geometric(ratio, scale)`` =
    scale*ratio**n, ``factorial`` = n!, ``table(values)`` (last value repeats).
    """

    kind: str
    value: float = 1.0
    shift: float = 0.0
    ratio: float = 0.5
    scale: float = 1.0
    table: tuple[float, ...] = ()
    complement: bool = False

    def __post_init__(self):
        if self.kind not in _SEQ_KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.kind in ("reciprocal_sqrt", "reciprocal") and self.shift <= 0:
            raise ValueError("shift must be positive")
        if self.kind == "geometric" and not (self.ratio > 0 and self.scale > 0):
            raise ValueError("geometric sequences need positive ratio and scale")
        if self.kind == "table":
            if not self.table:
                raise ValueError("table sequence needs values")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))
        if self.complement and self.kind == "factorial":
            raise ValueError("complement of a factorial sequence is not a probability")

    @classmethod
    def from_dict(cls, spec: dict) -> "SequenceSpec":
        spec = dict(spec)
        if "table" in spec:
            spec["table"] = tuple(spec["table"])
        return cls(**spec)

    def as_dict(self) -> dict[str, Any]:
        out = {"kind": self.kind}
        defaults = {f.name: f.default for f in fields(self)}
        for k in ("value", "shift", "ratio", "scale", "table", "complement"):
            v = getattr(self, k)
            if v != defaults[k]:
                out[k] = list(v) if isinstance(v, tuple) else v
        return out

    def _raw_log(self, n: np.ndarray) -> np.ndarray:
        n = n.astype(float)
        if self.kind == "constant":
            return np.full(n.shape, math.log(self.value) if self.value > 0 else -np.inf)
        if self.kind == "reciprocal_sqrt":
            return -0.5 * np.log(n + self.shift)
        if self.kind == "reciprocal":
            return -np.log(n + self.shift)
        if self.kind == "geometric":
            return math.log(self.scale) + n * math.log(self.ratio)
        if self.kind == "factorial":
            return gammaln(n + 1.0)
        vals = np.asarray(self.table)
        with np.errstate(divide="ignore"):
            return np.log(vals[np.minimum(n.astype(np.int64), len(vals) - 1)])

    def log_terms(self, stop: int, start: int = 0) -> np.ndarray:
        """``log a_n`` for ``start <= n < stop`` (before any complement)."""
        if self.complement:
            return np.log(self.terms(stop, start))
        return self._raw_log(np.arange(start, stop))

    def terms(self, stop: int, start: int = 0) -> np.ndarray:
        n = np.arange(start, stop)
        if self.kind in ("constant", "table"):
            raw = (np.full(n.shape, self.value) if self.kind == "constant"
                   else np.asarray(self.table)[np.minimum(n, len(self.table) - 1)])
        else:
            with np.errstate(over="ignore"):  # factorial terms saturate to inf
                raw = np.exp(self._raw_log(n))
        return 1.0 - raw if self.complement else raw

    def term(self, n: int) -> float:
        return float(self.terms(n + 1, n)[0])

    def check_range(self, lo: float, hi: float, start: int = 0, stop: int = SERIES_HORIZON,
                    closed: bool = False) -> bool:
        """Whether every term with index in ``[start, stop)`` lies in (lo, hi)."""
        t = self.terms(stop, start)
        if closed:
            return bool(np.all((t >= lo) & (t <= hi)))
        return bool(np.all((t > lo) & (t < hi)))

    def tends_to_zero(self, horizon: int = SERIES_HORIZON) -> bool:
        t = np.abs(self.terms(horizon, 1))
        return bool(t[-1] < 1e-2 and t[-1] <= 0.1 * t[999])

    def series_converges(self, power: float = 1.0, horizon: int = SERIES_HORIZON) -> bool:
        """Numerically decide whether ``sum_n a_n**power`` is finite."""
        return series_converges(np.abs(self.terms(horizon)) ** power)


def series_converges(terms: np.ndarray) -> bool:
    """Decade test on partial sums of a non-negative series of >= 10**6 terms.

    With ``I_k = S(10**(k+1)) - S(10**k)``, the series is declared
    convergent when the decade increments for k = 3, 4, 5 shrink by at least
    half each decade, or the last one is below 1e-12.
    """
    terms = np.asarray(terms, dtype=float)
    if len(terms) < 10**6:
        raise ValueError("need at least 10**6 terms")
    s = np.cumsum(terms)
    inc = [s[10 ** (k + 1) - 1] - s[10**k - 1] for k in (3, 4, 5)]
    if inc[2] < 1e-12:
        return True
    return bool(inc[1] <= 0.5 * inc[0] and inc[2] <= 0.5 * inc[1])


# ---------------------------------------------------------------------------
# Kernels and lags
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Row-stochastic matrix on a finite alphabet; row ``i`` is ``K(alphabet[i], .)``."""

    alphabet: tuple[float, ...]
    matrix: np.ndarray

    def __post_init__(self):
        alphabet = tuple(float(a) for a in self.alphabet)
        mat = np.array(self.matrix, dtype=float)
        k = len(alphabet)
        if mat.shape != (k, k):
            raise ValueError(f"kernel matrix must be {k}x{k}")
        space = StateSpace.finite(alphabet)
        for row in mat:
            DiscreteMeasure(space, alphabet, row)  # validates the row
        mat.flags.writeable = False
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, alphabet: Sequence[float]) -> "KernelSpec":
        return cls(tuple(alphabet), np.eye(len(alphabet)))

    @classmethod
    def constant(cls, measure: DiscreteMeasure) -> "KernelSpec":
        alphabet = measure.space.alphabet
        row = np.array([measure.mass(a) for a in alphabet])
        return cls(alphabet, np.tile(row, (len(alphabet), 1)))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(len(self.alphabet))))

    def row(self, i: int) -> DiscreteMeasure:
        return DiscreteMeasure(StateSpace.finite(self.alphabet), self.alphabet, self.matrix[i])

    def apply(self, fvals: np.ndarray) -> np.ndarray:
        """``(K f)(x) = sum_y K(x, y) f(y)`` for ``f`` given on the alphabet."""
        return self.matrix @ np.asarray(fvals, dtype=float)

    def as_dict(self) -> dict[str, Any]:
        return {"alphabet": list(self.alphabet), "matrix": self.matrix.tolist()}


_LAG_KINDS = ("constant", "sqrt", "log")


@dataclass(frozen=True)
class LagSpec:
    """Information lag ``g``: the sub-filtration at time n is ``F_{n - g(n)}``.

    ``constant(m)`` uses ``g(x) = min(x, m)``; ``sqrt`` uses ``floor(sqrt(x))``;
    ``log`` uses ``floor(log(1 + x))``. The cap in ``constant`` keeps ``g(x) <= x``.
    """

    kind: str
    m: int = 0

    def __post_init__(self):
        if self.kind not in _LAG_KINDS:
            raise ValueError(f"unknown lag kind {self.kind!r}")
        if self.m < 0:
            raise ValueError("lag must be non-negative")

    def g(self, n) -> np.ndarray:
        x = np.asarray(n, dtype=np.int64)
        if self.kind == "constant":
            return np.minimum(x, self.m)
        if self.kind == "sqrt":
            return np.floor(np.sqrt(x) + 1e-12).astype(np.int64)
        return np.floor(np.log1p(x.astype(float))).astype(np.int64)

    def observed(self, n) -> np.ndarray:
        """Number of leading coordinates generating the sub-filtration at time n."""
        return np.asarray(n, dtype=np.int64) - self.g(n)

    def validate(self, horizon: int = SERIES_HORIZON) -> bool:
        """``g`` non-decreasing, ``g(x) <= x`` and ``n**-2 sum_{j<=n} g(j) -> 0``."""
        x = np.arange(0, horizon + 1)
        g = self.g(x)
        if np.any(np.diff(g) < 0) or np.any(g > x) or np.any(g < 0):
            return False
        s = np.cumsum(g)
        ratios = [s[n] / float(n) ** 2 for n in (10**4, 10**5, horizon)]
        return bool(ratios[0] >= ratios[1] >= ratios[2] and ratios[2] < 1e-3)

    def as_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "m": self.m}


# ---------------------------------------------------------------------------
# Process models
# ---------------------------------------------------------------------------

EnumState = Hashable
Transition = tuple[Any, EnumState, float]


def discrete_draw(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """Inverse-CDF index for uniforms ``u`` (``cdf`` is 1-d or row-wise 2-d)."""
    if cdf.ndim == 1:
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return np.minimum((u[:, None] >= cdf).sum(axis=1), cdf.shape[1] - 1)


def normalize_obs(x) -> Any:
    """Hashable form of a point: float for scalars, tuple of floats otherwise."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return tuple(float(v) for v in arr.reshape(-1))


class ProcessModel(ABC):
    """A named process: seeded batch sampler, predictive evaluators and flags.

    Subclasses are frozen dataclasses. Vectorized methods act on a
    :class:`Batch` of paths and a vector of indices ``ns``; ``predictive``
    returns ``alpha_n(f)`` for each path and each ``n`` in ``ns`` (shape
    ``(P, len(ns))``), which requires ``max(ns) <= batch.horizon``.

    Finite-latent models also expose the enumeration interface
    (``enum_initial``, ``enum_step``, ``enum_lookahead``) consumed by the
    exact engine in :mod:`predlab.predictive`.
    """

    id: str
    space: StateSpace
    flags: Flags
    citation: str = ""

    @property
    @abstractmethod
    def params(self) -> dict[str, Any]:
        """JSON-friendly parameter record."""

    @abstractmethod
    def sample_batch(self, seeds: np.ndarray, n: int) -> Batch:
        """Sample the first ``n`` coordinates of one path per seed."""

    #: "closed_form" or "enumeration" (filtering on the latent layer).
    predictive_method: str = "closed_form"

    def method_for(self, f: TestFunction) -> str:
        """Method tag reported with predictive values for ``f``."""
        return self.predictive_method

    def path_auxiliary(self, batch: Batch) -> dict[str, np.ndarray]:
        """Extra per-path records kept by :func:`sample_path` only."""
        return {}

    def predictive(self, batch: Batch, ns: np.ndarray, f: TestFunction) -> np.ndarray:
        raise UnsupportedPredictive(f"{self.id}: no registered predictive")

    def increment(self, batch: Batch, ns: np.ndarray, f: TestFunction) -> np.ndarray:
        """``E{f(X_{n+2}) - f(X_{n+1}) | F_n}`` per path and index."""
        raise UnsupportedPredictive(f"{self.id}: no registered predictive increment")

    def lagged_predictive(self, batch: Batch, ns: np.ndarray, f: TestFunction,
                          lag: LagSpec) -> np.ndarray:
        """``E{f(X_{n+1}) | F_{n - g(n)}}`` per path and index."""
        raise UnsupportedPredictive(f"{self.id}: no sub-filtration predictive")

    def marginal_expectation(self, t: int, f: TestFunction) -> float | None:
        """Exact ``E f(X_t)`` when known, else ``None``."""
        return None

    # enumeration interface --------------------------------------------------
    enum_lookahead: int = 0

    @property
    def supports_enumeration(self) -> bool:
        return type(self).enum_step is not ProcessModel.enum_step

    def enum_initial(self) -> list[tuple[EnumState, float]]:
        raise UnsupportedPredictive(f"{self.id}: latent layer is not finite")

    def enum_step(self, state: EnumState, t: int) -> list[Transition]:
        """Transitions generating ``X_t`` from the latent state after ``t - 1`` steps."""
        raise UnsupportedPredictive(f"{self.id}: latent layer is not finite")

    def describe(self) -> dict[str, Any]:
        return {"id": self.id, "space": str(self.space), "params": self.params,
                "flags": self.flags.as_dict(), "citation": self.citation}


def sample_path(model: ProcessModel, n: int, seed: int) -> PathSample:
    """First ``n`` coordinates of the path with 64-bit seed ``seed``."""
    if int(n) < 1:
        raise ValueError("sample_path needs n >= 1")
    seeds = np.array([int(seed) & rng.MASK64], dtype=np.uint64)
    batch = model.sample_batch(seeds, int(n))
    aux = {**batch.auxiliary, **model.path_auxiliary(batch)}
    return PathSample(model.id, int(seed) & rng.MASK64, batch.values[0],
                      {k: v[0] for k, v in aux.items()})


def as_index_array(ns: Iterable[int] | int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if np.any(arr < 0):
        raise ValueError("indices must be non-negative")
    return arr


def finite_values(f: TestFunction, alphabet: Sequence[float]) -> np.ndarray:
    return f.on_axis(np.asarray(alphabet, dtype=float))
