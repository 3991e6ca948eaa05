"""Statistical deciders for the convergence conditions on predictive distributions.

Every diagnostic turns Monte Carlo (or exact) evidence into one or more
:class:`ConvergenceCurve` objects. A curve's ``kind`` fixes the decision
rule in :func:`decide_curve`, which depends only on ``(n, statistic,
stderr)`` and the :class:`Thresholds`; verdicts can therefore be re-derived
from stored curves. Curves that compare an estimate with a target store the
signed deviation ``estimate - target`` as their statistic.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate as quad_integrate
from scipy.special import ndtr

from predlab import rng
from predlab.errors import ConfigError
from predlab.measure import (
    GRID_POINTS, StateSpace, TestFunction, bl_axes, grid_bl, grid_masses,
)
from predlab.montecarlo import N_BATCHES, batch_mean_se, jackknife_se, simulate
from predlab.predictive import exact_abs_increment, exact_moments, subfiltration_cid_defect
from predlab.processes.base import Batch, Decision, Flags, ProcessModel
from predlab.processes.counterexamples import CLTModel, gaussian_expectation
from predlab.processes.lagged import LaggedModel

#: Largest block length accepted by the exchangeability statistic.
MAX_BLOCK = 4
#: Delete-a-group count for jackknife errors of BL statistics.
JACKKNIFE_GROUPS = N_BATCHES


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds (configuration, not code).

    ``fail`` / ``floor`` bound probability-type curves and ``max_rise`` is the
    largest climb such a curve may show and still converge. ``se_multiple`` sets
    every Monte Carlo margin, ``tolerance`` is added to target comparisons,
    ``margin`` is the minimum separation for a divergence call on
    deviation-type curves. Batch-means errors use ``n_batches`` path batches;
    the BL jackknife uses at most ``JACKKNIFE_GROUPS`` groups because
    each group costs two linear programs.
    """

    fail: float = 0.05
    floor: float = 0.20
    max_rise: float = 0.0125
    se_multiple: float = 3.0
    n_batches: int = 100
    tolerance: float = 0.0
    margin: float = 0.05
    qmc_tolerance: float = 0.01
    wlln_tolerance: float = 0.02
    limit_tolerance: float = 0.05
    ae_tolerance: float = 0.01
    exact_tolerance: float = 1e-10
    profile: str = "default"

    @classmethod
    def from_dict(cls, d: dict | None) -> "Thresholds":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
        out = cls(**d)
        if out.n_batches < N_BATCHES or out.se_multiple < 0:
            raise ConfigError(f"n_batches must be >= {N_BATCHES} and se_multiple >= 0")
        return out

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceCurve:
    f_id: str
    kind: str
    n: tuple[int, ...]
    statistic: tuple[float, ...]
    stderr: tuple[float, ...]
    method: str = "monte_carlo"
    label: str = ""
    note: str = ""

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        stat = tuple(float(v) for v in np.atleast_1d(self.statistic))
        se = tuple(float(v) for v in np.atleast_1d(self.stderr))
        if not n:
            raise ValueError("curve grid must be non-empty")
        if any(b <= a for a, b in zip(n, n[1:])):
            raise ValueError("curve grid must be strictly increasing")
        if len(stat) != len(n) or len(se) != len(n):
            raise ValueError("curve arrays differ in length")
        if any(s < 0 or math.isnan(s) for s in se):
            raise ValueError("standard errors must be non-negative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "statistic", stat)
        object.__setattr__(self, "stderr", se)

    @property
    def tag(self) -> str:
        return f"{self.kind}:{self.label}" if self.label else self.kind

    def as_dict(self) -> dict:
        return {"f_id": self.f_id, "kind": self.kind, "label": self.label, "note": self.note,
                "method": self.method, "n": list(self.n), "statistic": list(self.statistic),
                "stderr": list(self.stderr)}

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceCurve":
        return cls(**d)


@dataclass(frozen=True)
class DiagnosticVerdict:
    condition: str
    f_id: str
    decision: Decision
    evidence: tuple[ConvergenceCurve, ...]
    thresholds: Thresholds
    note: str = ""

    def as_dict(self) -> dict:
        return {"condition": self.condition, "f_id": self.f_id, "decision": str(self.decision),
                "evidence": [c.as_dict() for c in self.evidence],
                "thresholds": self.thresholds.as_dict(), "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticVerdict":
        return cls(d["condition"], d["f_id"], Decision(d["decision"]),
                   tuple(ConvergenceCurve.from_dict(c) for c in d["evidence"]),
                   Thresholds.from_dict(d["thresholds"]), d.get("note", ""))


# ---------------------------------------------------------------------------
# Decision rules
# ---------------------------------------------------------------------------

_PROB_KINDS = ("cauchy_prob", "excursion_fraction", "increment_prob")


def decide_curve(curve: ConvergenceCurve, th: Thresholds) -> Decision | None:
    """Decision carried by one curve (``None`` for informational curves)."""
    s = np.asarray(curve.statistic)
    se = np.asarray(curve.stderr)
    k = th.se_multiple
    tol = th.tolerance + th.exact_tolerance
    last2 = slice(-2, None)
    C, D, I = Decision.CONVERGES, Decision.DIVERGES, Decision.INCONCLUSIVE

    if curve.kind in _PROB_KINDS:
        # fixed cutoff: a noise-scaled one would let larger errors unlock C
        rising = s[-1] - s[0] > th.max_rise + th.exact_tolerance
        if np.all(s[last2] - k * se[last2] > th.floor):
            return D
        if not rising and s[-1] + k * se[-1] < th.fail:
            return C
        return I
    if curve.kind == "partial_sum":
        if len(s) < 3:
            return I
        inc = np.diff(s[-3:])
        inc_se = np.hypot(se[-3:][1:], se[-3:][:-1])
        if np.all(inc + k * inc_se <= th.qmc_tolerance + th.exact_tolerance):
            return C
        if np.all(inc - k * inc_se > th.qmc_tolerance):
            return D
        return I
    if curve.kind in ("deviation", "moment_gap"):
        if abs(s[-1]) <= k * se[-1] + tol:
            return C
        if np.all(np.abs(s[last2]) - k * se[last2] >= th.margin):
            return D
        return I
    if curve.kind == "marginal_prob":
        if len(s) < 2:
            return I
        step = abs(s[-1] - s[-2])
        noise = k * math.hypot(se[-1], se[-2])
        if step <= noise + tol:
            return C
        if step - noise > th.margin:
            return D
        return I
    if curve.kind == "median_residual":
        if s[-1] + k * se[-1] <= th.wlln_tolerance:
            return C
        if np.all(s[last2] - k * se[last2] > th.floor):
            return D
        return I
    if curve.kind == "bound_slack":
        if np.all(s + k * se <= th.exact_tolerance):
            return C
        if np.any(s - k * se > th.exact_tolerance):
            return D
        return I
    if curve.kind == "perm_excess":
        if s[-1] <= k * se[-1] + th.ae_tolerance:
            return C
        if np.all(s[last2] - k * se[last2] > th.ae_tolerance):
            return D
        return I
    if curve.kind == "limit_bl":
        if s[-1] + k * se[-1] <= th.limit_tolerance:
            return C
        if np.all(s[last2] - k * se[last2] > th.limit_tolerance):
            return D
        return I
    if curve.kind == "info":
        return None
    raise ValueError(f"unknown curve kind {curve.kind!r}")


def combine(decisions: Iterable[Decision | None]) -> Decision:
    """Any divergence wins; convergence needs every curve to converge."""
    ds = [d for d in decisions if d is not None]
    if not ds:
        return Decision.INCONCLUSIVE
    if Decision.DIVERGES in ds:
        return Decision.DIVERGES
    if all(d is Decision.CONVERGES for d in ds):
        return Decision.CONVERGES
    return Decision.INCONCLUSIVE


def make_verdict(condition: str, f_id: str, curves: Sequence[ConvergenceCurve],
                 th: Thresholds, note: str = "") -> DiagnosticVerdict:
    decision = combine(decide_curve(c, th) for c in curves)
    return DiagnosticVerdict(condition, f_id, decision, tuple(curves), th, note)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _grid(grid) -> np.ndarray:
    g = np.unique(np.asarray(list(grid), dtype=np.int64))
    if len(g) == 0 or g[0] < 1:
        raise ValueError("grid must contain positive indices")
    return g


def _mc(model, paths, horizon, seed, stat, workers):
    return simulate(model, paths, max(int(horizon), 1), seed, stat, workers=workers)


def _batches(th: Thresholds, n_paths: int) -> int:
    """Batch count: ``th.n_batches`` capped by the path count (configs guarantee >= 30)."""
    return max(2, min(th.n_batches, n_paths))


def _mean_curve(f_id, kind, grid, samples, th, method="monte_carlo", label="", offset=0.0,
                note=""):
    mean, se = batch_mean_se(samples, _batches(th, len(samples)))
    return ConvergenceCurve(f_id, kind, grid, np.atleast_1d(mean) - offset, np.atleast_1d(se),
                            method, label, note)


def batch_median_se(x: np.ndarray, n_batches: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Median over axis 0 with a batch-medians standard error."""
    x = np.asarray(x, dtype=float)
    meds = np.stack([np.median(b, axis=0) for b in np.array_split(x, n_batches)])
    return np.median(x, axis=0), meds.std(axis=0, ddof=1) / math.sqrt(n_batches)


# ---------------------------------------------------------------------------
# Convergence of predictives
# ---------------------------------------------------------------------------


def cauchy_in_probability(model: ProcessModel, f: TestFunction, grid, *, epsilon: float = 0.1,
                          paths: int = 10_000, seed: int = 0, thresholds: Thresholds | None = None,
                          workers: int = 1, condition: str = "star") -> DiagnosticVerdict:
    """``p_n = P(|alpha_{2n}(f) - alpha_n(f)| > epsilon)`` over the grid."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    ns = np.concatenate([g, 2 * g])

    def stat(batch: Batch) -> np.ndarray:
        a = model.predictive(batch, ns, f)
        return (np.abs(a[:, len(g):] - a[:, : len(g)]) > epsilon).astype(float)

    hits = _mc(model, paths, 2 * g.max(), seed, stat, workers)
    curve = _mean_curve(f.name, "cauchy_prob", g, hits, th, model.method_for(f),
                        note=f"epsilon={epsilon:g}")
    return make_verdict(condition, f.name, [curve], th)


def as_convergence_check(model: ProcessModel, f: TestFunction, grid, *, horizon: int | None = None,
                         delta: float = 0.4, paths: int = 10_000, seed: int = 0,
                         thresholds: Thresholds | None = None, workers: int = 1,
                         condition: str = "as") -> DiagnosticVerdict:
    """Fraction of paths with ``sup_{k in [n, 3n]} |alpha_k(f) - alpha_N(f)| > delta``."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    big_n = int(horizon or 3 * g.max())
    if big_n < g.max():
        raise ValueError("horizon must be at least the largest window start")
    ks = np.arange(g.min(), big_n + 1)

    def stat(batch: Batch) -> np.ndarray:
        a = model.predictive(batch, ks, f)
        dev = np.abs(a - a[:, -1:])
        out = np.empty((batch.n_paths, len(g)))
        for j, n in enumerate(g):
            lo, hi = n - ks[0], min(3 * n, big_n) - ks[0] + 1
            out[:, j] = dev[:, lo:hi].max(axis=1) > delta
        return out

    hits = _mc(model, paths, big_n, seed, stat, workers)
    curve = _mean_curve(f.name, "excursion_fraction", g, hits, th, model.method_for(f),
                        note=f"delta={delta:g} N={big_n}")
    return make_verdict(condition, f.name, [curve], th)


def quasi_martingale_sum(model: ProcessModel, f: TestFunction, grid, *, mode: str = "exact",
                         paths: int = 10_000, seed: int = 0, thresholds: Thresholds | None = None,
                         workers: int = 1) -> ConvergenceCurve:
    """Partial sums ``S_N = sum_{n<=N} E|E{f(X_{n+2}) - f(X_{n+1}) | F_n}|``."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    if mode == "exact":
        terms = np.array([exact_abs_increment(model, n, f) for n in range(int(g.max()) + 1)])
        sums = np.cumsum(terms)[g]
        return ConvergenceCurve(f.name, "partial_sum", g, sums, np.zeros(len(g)), "enumeration")
    if mode != "monte_carlo":
        raise ValueError("mode must be 'exact' or 'monte_carlo'")
    ns = np.arange(0, int(g.max()) + 1)

    def stat(batch: Batch) -> np.ndarray:
        return np.cumsum(np.abs(model.increment(batch, ns, f)), axis=1)[:, g]

    sums = _mc(model, paths, g.max(), seed, stat, workers)
    return _mean_curve(f.name, "partial_sum", g, sums, th, model.method_for(f))


def wlln_residual(model: ProcessModel, f: TestFunction, grid, *, paths: int = 1000, seed: int = 0,
                  thresholds: Thresholds | None = None, workers: int = 1
                  ) -> tuple[ConvergenceCurve, ConvergenceCurve]:
    """Median over paths of ``|mu_n(f) - (1/n) sum_{i<=n} alpha_{i-1}(f)|`` and of ``|mu_n(f) - alpha_n(f)|``."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    big_n = int(g.max())
    ns = np.arange(0, big_n + 1)
    counts = np.arange(1, big_n + 1)

    def stat(batch: Batch) -> np.ndarray:
        a = model.predictive(batch, ns, f)
        mu = np.cumsum(f(batch.values), axis=1) / counts
        avg_pred = np.cumsum(a[:, :-1], axis=1) / counts
        resid = np.abs(mu - avg_pred)[:, g - 1]
        gap = np.abs(mu[:, g - 1] - a[:, g])
        return np.concatenate([resid, gap], axis=1)

    out = _mc(model, paths, big_n, seed, stat, workers)
    med, se = batch_median_se(out, _batches(th, len(out)))
    m = model.method_for(f)
    resid = ConvergenceCurve(f.name, "median_residual", g, med[: len(g)], se[: len(g)], m,
                             label="wlln")
    gap = ConvergenceCurve(f.name, "median_residual", g, med[len(g):], se[len(g):], m,
                           label="empirical_gap")
    return resid, gap


def lagged_wlln_check(model: LaggedModel, f: TestFunction, grid, *, epsilon: float = 0.05,
                      limit: float | None = None, paths: int = 10_000, seed: int = 0,
                      thresholds: Thresholds | None = None, workers: int = 1,
                      condition: str = "lagged_wlln") -> DiagnosticVerdict:
    """Cauchy-in-probability for the empirical means ``mu_n(f)`` over pairs ``(n, 2n)``."""
    th = thresholds or Thresholds()
    if not isinstance(model, LaggedModel):
        raise ValueError("lagged_wlln_check needs a model with lag metadata")
    if not model.lag.validate():
        raise ValueError("lag violates the growth conditions")
    g = _grid(grid)

    def stat(batch: Batch) -> np.ndarray:
        mu = np.cumsum(f(batch.values), axis=1) / np.arange(1, batch.horizon + 1)
        hits = np.abs(mu[:, 2 * g - 1] - mu[:, g - 1]) > epsilon
        return np.concatenate([hits.astype(float), mu[:, g - 1]], axis=1)

    out = _mc(model, paths, 2 * g.max(), seed, stat, workers)
    curves = [_mean_curve(f.name, "cauchy_prob", g, out[:, : len(g)], th,
                          note=f"epsilon={epsilon:g} lag={model.lag.kind}:{model.lag.m}")]
    if limit is not None:
        curves.append(_mean_curve(f.name, "deviation", g, out[:, len(g):], th, offset=limit,
                                  label="limit", note=f"target={limit:.17g}"))
    return make_verdict(condition, f.name, curves, th)


# ---------------------------------------------------------------------------
# Asymptotic exchangeability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitLaw:
    """Registered limit of shifted blocks: i.i.d. copies or the diagonal ``(W, ..., W)``."""

    kind: str
    cdf: Callable[[np.ndarray], np.ndarray]
    name: str = ""
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("iid", "diagonal"):
            raise ValueError("limit kind must be 'iid' or 'diagonal'")
        if not self.support[0] < self.support[1]:
            raise ValueError("limit grid range must be a non-empty interval")

    @classmethod
    def iid_uniform(cls) -> "LimitLaw":
        return cls("iid", lambda x: np.clip(x, 0.0, 1.0), "iid uniform(0,1)")

    @classmethod
    def diagonal_gaussian(cls) -> "LimitLaw":
        return cls("diagonal", ndtr, "(W,...,W), W ~ N(0,1)", (-4.0, 4.0))


def block_space(space: StateSpace, k: int) -> StateSpace:
    axes = list(space.axes) * k
    return StateSpace.product(*axes)


def sample_bl(space: StateSpace, x: np.ndarray, y: np.ndarray,
              max_nodes: int = GRID_POINTS) -> float:
    """Grid BL distance between the empirical laws of two samples (rows are points)."""
    axes, _ = bl_axes(space, [x, y], max_nodes)
    pm = grid_masses(axes, x, np.full(len(x), 1.0 / len(x)))
    qm = grid_masses(axes, y, np.full(len(y), 1.0 / len(y)))
    return grid_bl(axes, pm, qm)


def limit_bl(space: StateSpace, x: np.ndarray, law: LimitLaw,
             max_nodes: int = GRID_POINTS) -> float:
    """Grid BL distance between the empirical law of ``x`` and a registered limit.

    Both laws are binned to a common uniform grid on ``law.support`` with
    ``floor(max_nodes**(1/K))`` points per axis (mass outside goes to the end
    cells); limit masses are exact cell probabilities. The grid does not
    depend on the sample, so jackknife replicates share it.
    """
    kdim = space.dim
    r = max(2, int(math.floor(max_nodes ** (1.0 / kdim) + 1e-9)))
    node = np.linspace(law.support[0], law.support[1], r)
    edges = np.concatenate([[-np.inf], 0.5 * (node[1:] + node[:-1]), [np.inf]])
    cell = np.diff(law.cdf(edges))
    axes = [node] * kdim
    pm = grid_masses(axes, x, np.full(len(x), 1.0 / len(x)))
    if law.kind == "iid":
        qm = cell
        for _ in range(kdim - 1):
            qm = np.multiply.outer(qm, cell)
        qm = qm.ravel()
    else:
        qm = np.zeros(r**kdim)
        qm[np.ravel_multi_index(tuple([np.arange(r)] * kdim), (r,) * kdim)] = cell
    return grid_bl(axes, pm, qm / qm.sum())


def _permute_blocks(block: np.ndarray, seeds: np.ndarray, tag: str) -> np.ndarray:
    """Apply an independent uniform permutation of the block positions to each path."""
    sub = rng.substream(seeds, tag)
    keys = rng.uniforms(sub, np.arange(block.shape[1]))
    order = np.argsort(keys, axis=1)
    return np.take_along_axis(block, order.reshape(order.shape + (1,) * (block.ndim - 2)), axis=1)


def asymptotic_exchangeability_stat(model: ProcessModel, grid, k: int = 2, *,
                                    limit: LimitLaw | None = None, paths: int = 10_000,
                                    seed: int = 0, thresholds: Thresholds | None = None,
                                    workers: int = 1, max_nodes: int = GRID_POINTS
                                    ) -> list[ConvergenceCurve]:
    """Permutation asymmetry of blocks ``(X_{n+1}, ..., X_{n+k})``.

    ``T = BL(law(block), law(pi1 block))`` and the noise floor
    ``F = BL(law(pi2 block), law(pi1 block))`` for independent uniform
    permutations; under exchangeability ``T`` and ``F`` have the same
    distribution. Curves: ``perm_excess`` (``T - F`` with jackknife SE), the
    two raw statistics (informational), and ``limit_bl`` when a limit law is
    registered.
    """
    th = thresholds or Thresholds()
    if not 2 <= k <= MAX_BLOCK:
        raise ValueError(f"block length must be in [2, {MAX_BLOCK}]")
    g = np.unique(np.asarray(list(grid), dtype=np.int64))
    if len(g) == 0 or g[0] < 0:
        raise ValueError("block starts must be non-negative")
    groups = min(_batches(th, paths), JACKKNIFE_GROUPS)
    space = block_space(model.space, k)
    dim = model.space.dim

    def stat(batch: Batch) -> np.ndarray:
        rows = []
        for n in g:
            block = batch.values[:, n:n + k]
            if dim == 1:
                block = block[..., None]
            p1 = _permute_blocks(block, batch.seeds, "perm1")
            p2 = _permute_blocks(block, batch.seeds, "perm2")
            rows.append(np.stack([block, p1, p2], axis=1).reshape(batch.n_paths, 3, k * dim))
        return np.stack(rows, axis=1)

    data = _mc(model, paths, g.max() + k, seed, stat, workers)

    def excess(d):
        return sample_bl(space, d[:, 0], d[:, 1], max_nodes) - sample_bl(space, d[:, 2], d[:, 1], max_nodes)

    t_vals, f_vals, ex, ex_se, lim, lim_se = [], [], [], [], [], []
    for j in range(len(g)):
        d = data[:, j]
        t_vals.append(sample_bl(space, d[:, 0], d[:, 1], max_nodes))
        f_vals.append(sample_bl(space, d[:, 2], d[:, 1], max_nodes))
        e, s = jackknife_se(excess, d, groups)
        ex.append(e)
        ex_se.append(s)
        if limit is not None:
            v, s = jackknife_se(lambda dd: limit_bl(space, dd[:, 0], limit, max_nodes), d, groups)
            lim.append(v)
            lim_se.append(s)
    resolution = bl_axes(space, [data[:, -1, 0], data[:, -1, 1]], max_nodes)
    note = f"k={k} grid={'exact' if resolution[1] else 'binned'}:" + "x".join(
        str(len(a)) for a in resolution[0])
    zeros = np.zeros(len(g))
    curves = [
        ConvergenceCurve("block", "perm_excess", g, ex, ex_se, "monte_carlo", note=note),
        ConvergenceCurve("block", "info", g, t_vals, zeros, "monte_carlo", label="perm_stat"),
        ConvergenceCurve("block", "info", g, f_vals, zeros, "monte_carlo", label="noise_floor"),
    ]
    if limit is not None:
        curves.append(ConvergenceCurve("block", "limit_bl", g, lim, lim_se, "monte_carlo",
                                       note=f"limit={limit.name}"))
    return curves


# ---------------------------------------------------------------------------
# Stable convergence, moments, marginals, increments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderEvent:
    """Event ``{X_index[component] op value}`` on one early coordinate (``op='all'`` is Omega)."""

    name: str
    index: int = 1
    op: str = "all"
    value: float = 0.0
    component: int | None = None

    def __post_init__(self):
        if self.op not in ("all", "eq", "gt", "le"):
            raise ValueError(f"unknown event operator {self.op!r}")
        if self.index < 1:
            raise ValueError("event coordinates are 1-based")

    def indicator(self, values: np.ndarray) -> np.ndarray:
        if self.op == "all":
            return np.ones(len(values))
        x = values[:, self.index - 1]
        if self.component is not None:
            x = x[..., self.component]
        if self.op == "eq":
            return (x == self.value).astype(float)
        if self.op == "gt":
            return (x > self.value).astype(float)
        return (x <= self.value).astype(float)


def stable_convergence_check(model: ProcessModel, f: TestFunction, events: Sequence[CylinderEvent],
                             grid, targets: dict[str, float], *, paths: int = 10_000,
                             seed: int = 0, min_prob: float = 0.01,
                             thresholds: Thresholds | None = None, workers: int = 1,
                             condition: str = "stable") -> DiagnosticVerdict:
    """Deviation of ``E{1_H f(X_n)}`` from the registered ``E{1_H alpha(f)}`` per event."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    horizon = max(int(g.max()), max(e.index for e in events))

    def stat(batch: Batch) -> np.ndarray:
        fx = f(batch.values[:, g - 1])
        cols = []
        for e in events:
            h = e.indicator(batch.values)
            cols.append(np.column_stack([h, h[:, None] * fx]))
        return np.concatenate(cols, axis=1)

    out = _mc(model, paths, horizon, seed, stat, workers)
    curves = []
    width = len(g) + 1
    for i, e in enumerate(events):
        block = out[:, i * width:(i + 1) * width]
        if block[:, 0].mean() < min_prob:
            raise ValueError(f"event {e.name} has vanishing probability")
        curves.append(_mean_curve(f.name, "deviation", g, block[:, 1:], th, offset=targets[e.name],
                                  label=e.name, note=f"target={targets[e.name]:.17g}"))
    return make_verdict(condition, f.name, curves, th)


def second_moment_track(model: ProcessModel, f: TestFunction, grid, *, mode: str = "exact",
                        gaps: Sequence[tuple[str, str]] = (),
                        targets: dict[str, float] | None = None, paths: int = 10_000,
                        seed: int = 0, thresholds: Thresholds | None = None,
                        workers: int = 1) -> list[ConvergenceCurve]:
    """Curves for ``E alpha_n(f)^2``, ``E mu_n(f)^2`` (Monte Carlo only), ``E beta_n(f)^2``
    (with a lag) and ``(E f(X_{n+1}))^2``; plus ``moment_gap`` curves for the
    requested pairs and ``deviation`` curves for the requested targets.
    """
    th = thresholds or Thresholds()
    g = _grid(grid)
    lag = model.lag if isinstance(model, LaggedModel) else None
    stats: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    samples: dict[str, np.ndarray] = {}
    if mode == "exact":
        rows = [exact_moments(model, int(n), f, lag) for n in g]
        zeros = np.zeros(len(g))
        stats["predictive_sq"] = (np.array([r["predictive_sq"] for r in rows]), zeros)
        stats["marginal_sq"] = (np.array([r["marginal_mean"] ** 2 for r in rows]), zeros)
        if lag is not None:
            stats["sub_predictive_sq"] = (np.array([r["sub_predictive_sq"] for r in rows]), zeros)
        method = "enumeration"
    elif mode == "monte_carlo":
        names = ["predictive_sq", "empirical_sq", "fx"]
        if lag is not None:
            names.append("sub_predictive_sq")

        def stat(batch: Batch) -> np.ndarray:
            a = model.predictive(batch, g, f)
            fx = f(batch.values)
            mu = np.cumsum(fx, axis=1)[:, g - 1] / g
            cols = [a * a, mu * mu, fx[:, np.minimum(g, batch.horizon - 1)]]
            if lag is not None:
                b = model.sub_predictive(batch, g, f)
                cols.append(b * b)
            return np.stack(cols, axis=1)

        out = _mc(model, paths, g.max() + 1, seed, stat, workers)
        for i, name in enumerate(names):
            samples[name] = out[:, i]
            stats[name] = batch_mean_se(out[:, i], _batches(th, len(out)))
        m, se = stats.pop("fx")
        stats["marginal_sq"] = (m * m, 2 * np.abs(m) * se)
        samples.pop("fx")
        method = "monte_carlo"
    else:
        raise ValueError("mode must be 'exact' or 'monte_carlo'")

    curves = [ConvergenceCurve(f.name, "info", g, v, s, method, label=name)
              for name, (v, s) in stats.items()]
    for a, b in gaps:
        if a in samples and b in samples:
            mean, se = batch_mean_se(samples[a] - samples[b], _batches(th, len(samples[a])))
        else:
            mean = stats[a][0] - stats[b][0]
            se = np.hypot(stats[a][1], stats[b][1])
        curves.append(ConvergenceCurve(f.name, "moment_gap", g, mean, se, method, label=f"{a}-{b}"))
    for name, target in (targets or {}).items():
        v, s = stats[name]
        curves.append(ConvergenceCurve(f.name, "deviation", g, v - target, s, method,
                                       label=name, note=f"target={target:.17g}"))
    return curves


def marginal_limit_check(model: ProcessModel, family: Sequence[TestFunction], grid, *,
                         paths: int = 10_000, seed: int = 0,
                         thresholds: Thresholds | None = None, workers: int = 1,
                         condition: str = "marginal") -> DiagnosticVerdict:
    """Trend of ``P(X_n in B)`` per set ``B``; the final values estimate ``lambda(B)``."""
    th = thresholds or Thresholds()
    g = _grid(grid)

    def stat(batch: Batch) -> np.ndarray:
        x = batch.values[:, g - 1]
        return np.stack([f(x) for f in family], axis=1)

    out = _mc(model, paths, g.max(), seed, stat, workers)
    curves = [_mean_curve(f.name, "marginal_prob", g, out[:, i], th) for i, f in enumerate(family)]
    limits = ", ".join(f"{c.f_id}={c.statistic[-1]:.4f}" for c in curves)
    return make_verdict(condition, "family", curves, th, note=f"limits: {limits}")


def clt_abs_moments(model: CLTModel) -> tuple[float | None, float]:
    """``(E|X_n|`` if exact for all n else ``None``, ``E|Z_1|)``."""
    inn = model.innovation
    if inn.kind == "gaussian":
        v = math.sqrt(2.0 / math.pi)
        return v, v
    if inn.kind == "uniform":
        return None, math.sqrt(3.0) / 2.0
    return None, float(inn.measure.weights @ np.abs(inn.measure.atoms))


def necessary_increment_check(model: ProcessModel, f: TestFunction, grid, *,
                              epsilon: float = 0.05, bound: bool = False, paths: int = 10_000,
                              seed: int = 0, thresholds: Thresholds | None = None,
                              workers: int = 1, condition: str = "necessary_increment"
                              ) -> DiagnosticVerdict:
    """``P(|E{f(X_{n+2}) - f(X_{n+1}) | F_n}| > epsilon)`` over the grid.

    With ``bound`` (normalized-sum models only) also tracks the slack
    ``E|alpha_n(f) - f(X_n)| - c (E|X_n| + E|Z_1|) / sqrt(n + 1)`` with ``c`` the
    Lipschitz constant of ``f``.
    """
    th = thresholds or Thresholds()
    g = _grid(grid)
    if bound:
        if not isinstance(model, CLTModel):
            raise ValueError("the increment bound applies to normalized-sum models")
        if f.lipschitz_constant is None:
            raise ValueError("the increment bound needs a Lipschitz test function")
        exact_x, abs_z = clt_abs_moments(model)
        c = f.lipschitz_constant
        root = np.sqrt(g + 1.0)

    def stat(batch: Batch) -> np.ndarray:
        inc = np.abs(model.increment(batch, g, f)) > epsilon
        cols = [inc.astype(float)]
        if bound:
            x = batch.values[:, g - 1]
            dev = np.abs(model.predictive(batch, g, f) - f(x))
            ex = exact_x if exact_x is not None else np.abs(x)
            cols.append(dev - c * (ex + abs_z) / root)
        return np.concatenate(cols, axis=1)

    out = _mc(model, paths, g.max(), seed, stat, workers)
    curves = [_mean_curve(f.name, "increment_prob", g, out[:, : len(g)], th, model.method_for(f),
                          note=f"epsilon={epsilon:g}")]
    if bound:
        curves.append(_mean_curve(f.name, "bound_slack", g, out[:, len(g):], th,
                                  model.method_for(f), label="lipschitz_bound"))
    return make_verdict(condition, f.name, curves, th)


def clt_stable_target(f: TestFunction, n: int = 10**6) -> float:
    """``E{1_{Z_1 > 0} f(X_n)}`` for Gaussian innovations by quadrature over ``Z_1``.

    Given ``Z_1 = z``, ``X_n`` is normal with mean ``z / sqrt(n)`` and variance
    ``(n - 1) / n``.
    """
    sd = math.sqrt((n - 1.0) / n)

    def integrand(z):
        inner, _ = gaussian_expectation(f, np.array(z / math.sqrt(n)), sd)
        return float(inner) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    return quad_integrate.quad(integrand, 0.0, 12.0, epsabs=1e-12, limit=200)[0]


def subfiltration_cid_check(model: LaggedModel, f: TestFunction, grid, *, horizon: int = 2,
                            thresholds: Thresholds | None = None,
                            condition: str = "subfiltration_cid") -> DiagnosticVerdict:
    """Exact defect ``max |E{f(X_k) | G_n} - beta_n(f)|`` for ``n < k <= n + horizon``."""
    th = thresholds or Thresholds()
    g = _grid(grid)
    defect = [subfiltration_cid_defect(model, int(n), f, horizon) for n in g]
    curve = ConvergenceCurve(f.name, "deviation", g, defect, np.zeros(len(g)), "enumeration",
                             label="defect", note=f"horizon={horizon}")
    return make_verdict(condition, f.name, [curve], th)


def verdict_from_curves(condition: str, f_id: str, curves: Sequence[ConvergenceCurve],
                        th: Thresholds | None = None, note: str = "") -> DiagnosticVerdict:
    """Wrap curve-valued diagnostics (partial sums, residuals, moments, blocks) as a verdict."""
    return make_verdict(condition, f_id, list(curves), th or Thresholds(), note)


# ---------------------------------------------------------------------------
# Consistency of verdicts
# ---------------------------------------------------------------------------


def hierarchy_violations(decisions: dict[str, Decision], flags: Flags) -> list[str]:
    """Forward implications that emitted verdicts must respect.

    c.i.d. implies a.s. convergence, a.s. convergence implies convergence in
    probability, and convergence in probability implies asymptotic
    exchangeability. Reverse directions may fail.
    """
    C = Decision.CONVERGES
    out = []
    if flags.is_cid and decisions.get("as") not in (None, C):
        out.append("c.i.d. model not judged a.s. convergent")
    if decisions.get("as") is C and decisions.get("star") not in (None, C):
        out.append("a.s. convergent but not convergent in probability")
    if decisions.get("star") is C and decisions.get("asymp_exch") not in (None, C):
        out.append("convergent in probability but not asymptotically exchangeable")
    return out
