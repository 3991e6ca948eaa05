"""The four separating constructions: triples, sine pairs, m-dependent differences, CLT sums."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate as quad_integrate
from scipy.special import ndtr, ndtri

from predlab import rng
from predlab.errors import ConditioningError
from predlab.measure import DiscreteMeasure, StateSpace, TestFunction
from predlab.processes.base import (
    Batch, Decision, Flags, LagSpec, ProcessModel, SequenceSpec, as_index_array, discrete_draw,
)

_BINARY = StateSpace.finite((0.0, 1.0))


# ---------------------------------------------------------------------------
# Pairwise independent triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TripleModel(ProcessModel):
    """``X_{3k-2} = 1_A``, ``X_{3k-1} = 1_B``, ``X_{3k} = 1_C`` for independent triples.

    ``A, B`` are independent with probability ``d_k`` and ``C = (A and B) or G``
    where ``G`` lies outside ``A u B`` with probability ``d_k - d_k**2``.
    ``G`` is realized as ``{not A, not B, U < d_k / (1 - d_k)}`` for an extra
    uniform ``U``. Triple ``k`` uses draws at step ``k`` (slots 0, 1, 2).
    """

    d: SequenceSpec
    id: str = "triple"
    space: StateSpace = _BINARY
    citation = "pairwise independent triples (A_n, B_n, C_n): convergence in probability without a.s. convergence"

    @property
    def params(self):
        return {"d": self.d.as_dict()}

    @cached_property
    def flags(self):
        vanish = self.d.tends_to_zero()
        as_ok = vanish and self.d.series_converges(power=2)
        return Flags(
            is_exchangeable=False, is_cid=False, m_cid_order=None, is_stationary=False,
            expected_star=Decision.CONVERGES if vanish else Decision.INCONCLUSIVE,
            expected_as=Decision.CONVERGES if as_ok else (
                Decision.DIVERGES if vanish else Decision.INCONCLUSIVE),
            expected_asymp_exch=Decision.CONVERGES if vanish else Decision.INCONCLUSIVE,
            pairwise_independent=True,
        )

    def d_at(self, k) -> np.ndarray:
        """``d_k`` for triple indices ``k >= 1``."""
        k = np.asarray(k, dtype=np.int64)
        top = int(k.max()) + 1 if k.size else 1
        return self.d.terms(top)[k]

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        n_triples = -(-n // 3)
        ks = np.arange(1, n_triples + 1)
        dk = self.d_at(ks)
        a = rng.uniforms(seeds, ks, 0) < dk
        b = rng.uniforms(seeds, ks, 1) < dk
        g = ~a & ~b & (rng.uniforms(seeds, ks, 2) < dk / (1.0 - dk))
        c = (a & b) | g
        values = np.stack([a, b, c], axis=-1).reshape(len(seeds), 3 * n_triples)[:, :n]
        aux = {"A": a.astype(float), "B": b.astype(float), "G": g.astype(float)}
        return Batch(seeds, values.astype(float), aux)

    def predictive(self, batch, ns, f):
        ns = as_index_array(ns)
        f0, f1 = (float(v) for v in f.on_axis(np.array([0.0, 1.0])))
        dk = self.d_at(ns // 3 + 1)
        base = np.broadcast_to(dk, (batch.n_paths, len(ns))).copy()
        third = ns % 3 == 2
        if np.any(third):
            x1 = batch.values[:, ns[third] - 2]
            x2 = batch.values[:, ns[third] - 1]
            r = dk[third] / (1.0 - dk[third])
            base[:, third] = x1 * x2 + r * (1.0 - x1) * (1.0 - x2)
        return f0 + (f1 - f0) * base

    def increment(self, batch, ns, f):
        ns = as_index_array(ns)
        f0, f1 = (float(v) for v in f.on_axis(np.array([0.0, 1.0])))
        ahead = f0 + (f1 - f0) * self.d_at((ns + 1) // 3 + 1)
        return ahead[None, :] - self.predictive(batch, ns, f)

    def marginal_expectation(self, t, f):
        f0, f1 = (float(v) for v in f.on_axis(np.array([0.0, 1.0])))
        return f0 + (f1 - f0) * float(self.d_at((t - 1) // 3 + 1))

    def enum_initial(self):
        return [((), 1.0)]

    def enum_step(self, state, t):
        d = float(self.d_at((t - 1) // 3 + 1))
        pos = (t - 1) % 3
        if pos < 2:
            return [(1.0, state + (1,), d), (0.0, state + (0,), 1.0 - d)]
        a, b = state
        if a and b:
            return [(1.0, (), 1.0)]
        if a or b:
            return [(0.0, (), 1.0)]
        r = d / (1.0 - d)
        return [(1.0, (), r), (0.0, (), 1.0 - r)]


def triple_model(d: SequenceSpec | None = None) -> TripleModel:
    """Triples with ``P(A_k) = P(B_k) = d_k``; default ``d_k = 1/sqrt(k + 4)``."""
    d = d or SequenceSpec("reciprocal_sqrt", shift=4.0)
    if d.complement and d.kind == "factorial":
        raise ValueError("invalid d sequence")
    if not d.check_range(0.0, 0.5, start=1):
        raise ValueError("triple_model needs 0 < d_k < 1/2 for every k >= 1")
    return TripleModel(d)


# ---------------------------------------------------------------------------
# Sine-perturbed pairs on the unit square
# ---------------------------------------------------------------------------

_MAX_ATTEMPTS = rng.SLOTS // 3


def _unit_moments(f: TestFunction) -> tuple[float, float]:
    """``(int_0^1 f, int_0^1 f(z) cos(2 pi z) dz)``."""
    if f.kind == "trig" and float(f.params["frequency"]).is_integer() and f.params["frequency"] != 0:
        k = abs(f.params["frequency"])
        c = 0.5 if (k == 1 and f.params["phase"] == "cos") else 0.0
        return 0.0, c
    if f.kind == "indicator" and f.params["interval"] is not None:
        lo, hi = (min(max(v, 0.0), 1.0) for v in f.params["interval"][:2])
        if hi <= lo:
            return 0.0, 0.0
        return hi - lo, (math.sin(2 * math.pi * hi) - math.sin(2 * math.pi * lo)) / (2 * math.pi)
    pts = [p for p in f.breakpoints() if 0.0 < p < 1.0] or None
    g = lambda z: float(f.on_axis(z))
    h = lambda z: float(f.on_axis(z)) * math.cos(2 * math.pi * z)
    opts = dict(points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)
    return quad_integrate.quad(g, 0.0, 1.0, **opts)[0], quad_integrate.quad(h, 0.0, 1.0, **opts)[0]


@dataclass(frozen=True, eq=False)
class SinePairModel(ProcessModel):
    """``X_1 = 0``, ``X_{2k} = Y_k``, ``X_{2k+1} = Z_k``; ``(Y_k, Z_k)`` has density
    ``1 + sin(2 pi k y) cos(2 pi z)`` on the unit square.

    Pairs are drawn by rejection from the uniform envelope with bound 2; at
    step ``k`` attempt ``a`` uses slots ``3a, 3a+1, 3a+2``.
    """

    id: str = "sine_pair"
    space: StateSpace = StateSpace.unit_interval()
    citation = "sine-perturbed pairs: asymptotically i.i.d. yet alpha_{2n}(cos 2 pi z) = sin(2 pi n Y_n)/2"
    flags: Flags = Flags(
        is_exchangeable=False, is_cid=False, m_cid_order=None, is_stationary=False,
        expected_star=Decision.DIVERGES, expected_as=Decision.DIVERGES,
        expected_asymp_exch=Decision.CONVERGES,
    )

    @property
    def params(self):
        return {}

    @staticmethod
    def density(y, z, k) -> np.ndarray:
        return 1.0 + np.sin(2 * math.pi * np.asarray(k) * y) * np.cos(2 * math.pi * z)

    def sample_pairs(self, seeds: np.ndarray, n_pairs: int) -> tuple[np.ndarray, np.ndarray]:
        seeds = np.asarray(seeds, dtype=np.uint64)
        shape = (len(seeds), n_pairs)
        ys, zs = np.empty(shape), np.empty(shape)
        seed_grid = np.broadcast_to(seeds[:, None], shape)
        k_grid = np.broadcast_to(np.arange(1, n_pairs + 1)[None, :], shape)
        pending = np.ones(shape, dtype=bool)
        for attempt in range(_MAX_ATTEMPTS):
            s, k = seed_grid[pending], k_grid[pending]
            y = rng.uniforms_at(s, k, 3 * attempt)
            z = rng.uniforms_at(s, k, 3 * attempt + 1)
            u = rng.uniforms_at(s, k, 3 * attempt + 2)
            ok = 2.0 * u < self.density(y, z, k)
            idx = tuple(ix[ok] for ix in np.nonzero(pending))
            ys[idx], zs[idx] = y[ok], z[ok]
            pending[idx] = False
            if not pending.any():
                return ys, zs
        raise RuntimeError("rejection sampler exhausted its random slots")

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        n_pairs = n // 2
        ys, zs = self.sample_pairs(seeds, n_pairs)
        values = np.zeros((len(seeds), n))
        values[:, 1::2] = ys[:, : len(range(1, n, 2))]
        values[:, 2::2] = zs[:, : len(range(2, n, 2))]
        return Batch(seeds, values, {"Y": ys, "Z": zs})

    def predictive(self, batch, ns, f):
        ns = as_index_array(ns)
        mean, c = _unit_moments(f)
        out = np.full((batch.n_paths, len(ns)), mean)
        out[:, ns == 0] = float(f.on_axis(0.0))
        even = (ns > 0) & (ns % 2 == 0)
        if np.any(even):
            k = ns[even] // 2
            y = batch.values[:, ns[even] - 1]
            out[:, even] = mean + np.sin(2 * math.pi * k * y) * c
        return out

    def increment(self, batch, ns, f):
        ns = as_index_array(ns)
        mean, _ = _unit_moments(f)
        return mean - self.predictive(batch, ns, f)

    def marginal_expectation(self, t, f):
        return float(f.on_axis(0.0)) if t == 1 else _unit_moments(f)[0]


def sine_pair_model() -> SinePairModel:
    return SinePairModel()


# ---------------------------------------------------------------------------
# Stationary m-dependent differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MDependentModel(ProcessModel):
    """``X_n = Y_n - Y_{n+m}`` with ``Y_i`` i.i.d. from a finite ``base``.

    No closed-form predictive is registered; predictives are computed by an
    exact forward filter over the unresolved latent window
    ``(Y_{n+1}, ..., Y_{n+m})``, vectorized over paths.
    """

    m: int
    base: DiscreteMeasure
    id: str = "m_dependent"
    predictive_method = "enumeration"
    citation = "stationary m-dependent X_n = Y_n - Y_{n+m}: not asymptotically exchangeable"

    @cached_property
    def atoms(self) -> np.ndarray:
        return self.base.atoms[self.base.weights > 0]

    @cached_property
    def probs(self) -> np.ndarray:
        return self.base.weights[self.base.weights > 0]

    @cached_property
    def space(self):
        diffs = np.unique(np.subtract.outer(self.atoms, self.atoms))
        return StateSpace.finite(diffs)

    @property
    def flags(self):
        return Flags(
            is_exchangeable=False, is_cid=False, m_cid_order=self.m, is_stationary=True,
            expected_star=Decision.DIVERGES, expected_as=Decision.DIVERGES,
            expected_asymp_exch=Decision.DIVERGES,
        )

    @property
    def params(self):
        return {"m": self.m, "base": {"atoms": self.base.atoms.tolist(),
                                      "weights": self.base.weights.tolist()}}

    @property
    def enum_lookahead(self):
        return self.m

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        u = rng.uniforms(seeds, np.arange(1, n + self.m + 1))
        y = self.atoms[discrete_draw(u.ravel(), np.cumsum(self.probs)).reshape(u.shape)]
        return Batch(seeds, y[:, :n] - y[:, self.m:], {"Y": y})

    # filter over latent windows ----------------------------------------------
    @cached_property
    def _filter(self):
        a = len(self.atoms)
        windows = np.array(list(itertools.product(range(a), repeat=self.m)))
        prior = np.prod(self.probs[windows], axis=1)
        index = {tuple(w): i for i, w in enumerate(windows)}
        nxt = np.empty((len(windows), a), dtype=np.int64)
        obs = np.empty((len(windows), a))
        for i, w in enumerate(windows):
            for j in range(a):
                nxt[i, j] = index[tuple(w[1:]) + (j,)]
                obs[i, j] = self.atoms[w[0]] - self.atoms[j]
        return prior, nxt, obs

    def _next_values(self, f: TestFunction) -> np.ndarray:
        """``E{f(X_{t+1}) | window}`` for each latent window."""
        _, _, obs = self._filter
        return f.on_axis(obs) @ self.probs

    def _propagate(self, pi: np.ndarray, x: np.ndarray | None = None) -> np.ndarray:
        _, nxt, obs = self._filter
        out = np.zeros_like(pi)
        for i in range(nxt.shape[0]):
            for j in range(nxt.shape[1]):
                w = pi[:, i] * self.probs[j]
                if x is not None:
                    w = w * (x == obs[i, j])
                out[:, nxt[i, j]] += w
        if x is not None:
            total = out.sum(axis=1, keepdims=True)
            if np.any(total <= 0):
                raise ConditioningError("observed values have probability zero under the model")
            out /= total
        return out

    def _free(self, pi: np.ndarray, steps: int) -> np.ndarray:
        prior = self._filter[0]
        if steps >= self.m:
            return np.broadcast_to(prior, pi.shape).copy()
        for _ in range(steps):
            pi = self._propagate(pi)
        return pi

    def beliefs(self, values: np.ndarray, ts) -> np.ndarray:
        """Filtered window laws after observing ``t`` coordinates, shape ``(P, len(ts), W)``."""
        ts = as_index_array(ts)
        prior = self._filter[0]
        pi = np.tile(prior, (len(values), 1))
        out = np.empty((len(values), len(ts), len(prior)))
        want = {}
        for j, t in enumerate(ts):
            want.setdefault(int(t), []).append(j)
        top = int(ts.max()) if len(ts) else 0
        for t in range(top + 1):
            if t in want:
                out[:, want[t]] = pi[:, None]
            if t < top:
                pi = self._propagate(pi, values[:, t])
        return out

    def predictive(self, batch, ns, f):
        return self.beliefs(batch.values, ns) @ self._next_values(f)

    def increment(self, batch, ns, f):
        ns = as_index_array(ns)
        g = self._next_values(f)
        pis = self.beliefs(batch.values, ns)
        out = np.empty(pis.shape[:2])
        for j in range(len(ns)):
            out[:, j] = self._free(pis[:, j], 1) @ g - pis[:, j] @ g
        return out

    def lagged_predictive(self, batch, ns, f, lag: LagSpec):
        ns = as_index_array(ns)
        g = self._next_values(f)
        seen = lag.observed(ns)
        pis = self.beliefs(batch.values, seen)
        out = np.empty(pis.shape[:2])
        for j, n in enumerate(ns):
            out[:, j] = self._free(pis[:, j], int(n - seen[j])) @ g
        return out

    def marginal_expectation(self, t, f):
        return float(self.probs @ f.on_axis(np.subtract.outer(self.atoms, self.atoms)) @ self.probs)

    def enum_initial(self):
        prior = self._filter[0]
        return [(tuple(w), float(p)) for w, p in
                zip(itertools.product(range(len(self.atoms)), repeat=self.m), prior)]

    def enum_step(self, state, t):
        return [(float(self.atoms[state[0]] - self.atoms[j]), state[1:] + (j,), float(p))
                for j, p in enumerate(self.probs)]


def m_dependent_model(m: int = 1, base: DiscreteMeasure | None = None) -> MDependentModel:
    """Differences ``Y_n - Y_{n+m}``; default base uniform on {0, 1}."""
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    base = base or DiscreteMeasure.uniform(_BINARY, [0.0, 1.0])
    if base.space.kind != "finite":
        raise ValueError("base must live on a finite alphabet")
    if np.sum(base.weights > 0) < 2:
        raise ValueError("base must be non-degenerate")
    return MDependentModel(int(m), base)


# ---------------------------------------------------------------------------
# Normalized sums of i.i.d. innovations
# ---------------------------------------------------------------------------

_INNOVATION_KINDS = ("gaussian", "uniform", "rademacher", "discrete")
_SQRT3 = math.sqrt(3.0)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(256)


@dataclass(frozen=True, eq=False)
class Innovation:
    """Standardized innovation law: gaussian, uniform, rademacher or a finite measure."""

    kind: str
    measure: DiscreteMeasure | None = None

    def __post_init__(self):
        if self.kind not in _INNOVATION_KINDS:
            raise ValueError(f"unknown innovation {self.kind!r}")
        if self.kind == "rademacher":
            object.__setattr__(self, "measure", DiscreteMeasure.uniform(
                StateSpace.real_line(), [-1.0, 1.0]))
        if self.kind == "discrete" or self.kind == "rademacher":
            m = self.measure
            if m is None or m.space.dim != 1:
                raise ValueError("discrete innovations need a scalar DiscreteMeasure")
            mean = float(m.weights @ m.atoms)
            var = float(m.weights @ m.atoms**2) - mean**2
            if abs(mean) > 1e-12 or abs(var - 1.0) > 1e-12:
                raise ValueError("innovation must have mean 0 and variance 1")

    @property
    def absolutely_continuous(self) -> bool:
        return self.kind in ("gaussian", "uniform")

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return ndtri(u)
        if self.kind == "uniform":
            return _SQRT3 * (2.0 * u - 1.0)
        cdf = np.cumsum(self.measure.weights)
        return self.measure.atoms[discrete_draw(u.ravel(), cdf).reshape(u.shape)]

    def as_dict(self):
        if self.kind == "discrete":
            return {"kind": "discrete", "atoms": self.measure.atoms.tolist(),
                    "weights": self.measure.weights.tolist()}
        return {"kind": self.kind}


def _pos_part_gauss(mu, sigma, k):
    """``E (mu + sigma Z - k)^+`` for standard normal ``Z``."""
    t = (mu - k) / sigma
    return (mu - k) * ndtr(t) + sigma * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def _pl_slopes(f: TestFunction):
    knots, vals = f.piecewise_linear()
    return knots, vals, np.diff(vals) / np.diff(knots)


def gaussian_expectation(f: TestFunction, mu, sigma: float) -> tuple[np.ndarray, str]:
    """``E f(mu + sigma Z)`` for standard normal ``Z``; exact where a formula exists."""
    mu = np.asarray(mu, dtype=float)
    if sigma == 0:
        return f.on_axis(mu), "closed_form"
    if f.kind == "indicator" and f.params["interval"] is not None:
        lo, hi = f.params["interval"][:2]
        return ndtr((hi - mu) / sigma) - ndtr((lo - mu) / sigma), "closed_form"
    if f.kind == "trig":
        w = 2 * math.pi * f.params["frequency"]
        damp = math.exp(-0.5 * (w * sigma) ** 2)
        trig_fn = np.cos if f.params["phase"] == "cos" else np.sin
        return damp * trig_fn(w * mu), "closed_form"
    if f.piecewise_linear() is not None:
        knots, vals, slopes = _pl_slopes(f)
        out = np.full(mu.shape, vals[0])
        for i, s in enumerate(slopes):
            out = out + s * (_pos_part_gauss(mu, sigma, knots[i]) - _pos_part_gauss(mu, sigma, knots[i + 1]))
        return out, "closed_form"
    return _quadrature(f, mu, sigma, "gaussian"), "quadrature"


def _pos_part_sq_int(lo, hi, k):
    """``int_lo^hi (x - k)^+ dx``."""
    return 0.5 * (np.maximum(hi - k, 0.0) ** 2 - np.maximum(lo - k, 0.0) ** 2)


def uniform_expectation(f: TestFunction, mu, half_width: float) -> tuple[np.ndarray, str]:
    """``E f(mu + V)`` for ``V`` uniform on ``[-h, h]``."""
    mu = np.asarray(mu, dtype=float)
    h = half_width
    if h == 0:
        return f.on_axis(mu), "closed_form"
    lo_x, hi_x = mu - h, mu + h
    if f.kind == "indicator" and f.params["interval"] is not None:
        lo, hi = f.params["interval"][:2]
        overlap = np.clip(np.minimum(hi, hi_x) - np.maximum(lo, lo_x), 0.0, None)
        return overlap / (2 * h), "closed_form"
    if f.kind == "trig":
        w = 2 * math.pi * f.params["frequency"]
        if w == 0:
            return f.on_axis(mu), "closed_form"
        if f.params["phase"] == "cos":
            return (np.sin(w * hi_x) - np.sin(w * lo_x)) / (w * 2 * h), "closed_form"
        return (np.cos(w * lo_x) - np.cos(w * hi_x)) / (w * 2 * h), "closed_form"
    if f.piecewise_linear() is not None:
        knots, vals, slopes = _pl_slopes(f)
        out = np.full(mu.shape, vals[0])
        for i, s in enumerate(slopes):
            seg = _pos_part_sq_int(lo_x, hi_x, knots[i]) - _pos_part_sq_int(lo_x, hi_x, knots[i + 1])
            out = out + s * seg / (2 * h)
        return out, "closed_form"
    return _quadrature(f, mu, h, "uniform"), "quadrature"


def _quadrature(f: TestFunction, mu: np.ndarray, scale: float, law: str) -> np.ndarray:
    """Adaptive quadrature fallback (absolute tolerance 1e-9)."""
    out = np.empty(mu.shape)
    for idx, m in np.ndenumerate(mu):
        if law == "gaussian":
            pts = [(p - m) / scale for p in f.breakpoints() if -8 < (p - m) / scale < 8] or None
            integrand = lambda z: float(f.on_axis(m + scale * z)) * math.exp(-0.5 * z * z)
            val = quad_integrate.quad(integrand, -8.0, 8.0, points=pts, epsabs=1e-9, limit=400)[0]
            out[idx] = val / math.sqrt(2 * math.pi)
        else:
            pts = [p for p in f.breakpoints() if m - scale < p < m + scale] or None
            integrand = lambda x: float(f.on_axis(x))
            val = quad_integrate.quad(integrand, m - scale, m + scale, points=pts,
                                      epsabs=1e-9, limit=400)[0]
            out[idx] = val / (2 * scale)
    return out


@dataclass(frozen=True, eq=False)
class CLTModel(ProcessModel):
    """``X_n = n**-1/2 (Z_1 + ... + Z_n)`` with i.i.d. standardized innovations."""

    innovation: Innovation
    id: str = "clt"
    space: StateSpace = StateSpace.real_line()
    citation = "normalized sums X_n = n^{-1/2} sum Z_i: stable limit, asymptotically exchangeable, predictive does not converge"
    flags: Flags = Flags(
        is_exchangeable=False, is_cid=False, m_cid_order=None, is_stationary=False,
        expected_star=Decision.DIVERGES, expected_as=Decision.DIVERGES,
        expected_asymp_exch=Decision.CONVERGES,
    )

    @property
    def params(self):
        return {"innovation": self.innovation.as_dict()}

    def sample_batch(self, seeds, n):
        seeds = np.asarray(seeds, dtype=np.uint64)
        z = self.innovation.from_uniform(rng.uniforms(seeds, np.arange(1, n + 1)))
        x = np.cumsum(z, axis=1) / np.sqrt(np.arange(1, n + 1))
        return Batch(seeds, x, {"Z": z})

    def shifted_expectation(self, f: TestFunction, mu, scale: float, terms: int = 1
                            ) -> tuple[np.ndarray, str]:
        """``E f(mu + scale * (Z_1 + ... + Z_terms))`` for ``terms`` in {1, 2}."""
        mu = np.asarray(mu, dtype=float)
        inn = self.innovation
        if inn.kind == "gaussian":
            return gaussian_expectation(f, mu, scale * math.sqrt(terms))
        if inn.kind == "uniform":
            if terms == 1:
                return uniform_expectation(f, mu, scale * _SQRT3)
            # integrate the one-step exact formula against the second uniform
            nodes = scale * _SQRT3 * _GL_NODES
            total, method = np.zeros(mu.shape), "closed_form"
            for x, w in zip(nodes, _GL_WEIGHTS):
                val, method = uniform_expectation(f, mu + x, scale * _SQRT3)
                total = total + 0.5 * w * val
            return total, "quadrature" if method == "quadrature" else "closed_form"
        atoms, weights = inn.measure.atoms, inn.measure.weights
        if terms == 2:
            atoms = np.add.outer(atoms, atoms).ravel()
            weights = np.outer(weights, weights).ravel()
        vals = f.on_axis(mu[..., None] + scale * atoms)
        return vals @ weights, "closed_form"

    def predictive_with_method(self, batch: Batch, ns, f: TestFunction
                               ) -> tuple[np.ndarray, str]:
        ns = as_index_array(ns)
        out = np.empty((batch.n_paths, len(ns)))
        method = "closed_form"
        for j, n in enumerate(ns):
            x = batch.values[:, n - 1] if n > 0 else np.zeros(batch.n_paths)
            a = math.sqrt(n / (n + 1.0))
            out[:, j], mth = self.shifted_expectation(f, a * x, 1.0 / math.sqrt(n + 1.0))
            method = "quadrature" if mth == "quadrature" else method
        return out, method

    def predictive(self, batch, ns, f):
        return self.predictive_with_method(batch, ns, f)[0]

    def method_for(self, f: TestFunction) -> str:
        probe = Batch(np.zeros(1, dtype=np.uint64), np.zeros((1, 1)))
        return self.predictive_with_method(probe, [1], f)[1]

    def increment(self, batch, ns, f):
        ns = as_index_array(ns)
        out = np.empty((batch.n_paths, len(ns)))
        alpha = self.predictive(batch, ns, f)
        for j, n in enumerate(ns):
            x = batch.values[:, n - 1] if n > 0 else np.zeros(batch.n_paths)
            a = math.sqrt(n / (n + 2.0))
            ahead, _ = self.shifted_expectation(f, a * x, 1.0 / math.sqrt(n + 2.0), terms=2)
            out[:, j] = ahead - alpha[:, j]
        return out

    def marginal_expectation(self, t, f):
        if self.innovation.kind == "gaussian":
            return float(gaussian_expectation(f, np.zeros(()), 1.0)[0])
        if t == 1:
            return float(self.shifted_expectation(f, np.zeros(()), 1.0)[0])
        return None


def clt_model(innovation: str | DiscreteMeasure | Innovation = "gaussian") -> CLTModel:
    """Normalized partial sums; ``innovation`` is a kind name or a finite measure."""
    if isinstance(innovation, DiscreteMeasure):
        innovation = Innovation("discrete", innovation)
    elif isinstance(innovation, str):
        innovation = Innovation(innovation)
    return CLTModel(innovation)
