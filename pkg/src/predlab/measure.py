"""State spaces, finite-support measures, bounded test functions and the BL metric."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from predlab.errors import DomainError, SpaceMismatch

#: Grid resolution (nodes) for BL computations that cannot be done exactly.
GRID_POINTS = 2**10
#: Tolerance on total mass of a :class:`DiscreteMeasure`.
WEIGHT_TOL = 1e-12

_SCALAR_KINDS = ("finite", "unit_interval", "real_line")


@dataclass(frozen=True)
class StateSpace:
    """Sample space descriptor: finite alphabet, [0, 1], the real line, or a product.

    Points of a scalar space are floats; points of a product are tuples
    (arrays with a trailing axis of length :attr:`dim`). Nested products are
    flattened coordinate-wise.
    """

    kind: str
    alphabet: tuple[float, ...] = ()
    components: tuple["StateSpace", ...] = ()

    def __post_init__(self):
        if self.kind not in _SCALAR_KINDS + ("product",):
            raise ValueError(f"unknown state space kind {self.kind!r}")
        if self.kind == "finite":
            labels = tuple(float(a) for a in self.alphabet)
            if not labels:
                raise ValueError("finite alphabet must be non-empty")
            if len(set(labels)) != len(labels):
                raise ValueError("finite alphabet labels must be distinct")
            object.__setattr__(self, "alphabet", labels)
        if self.kind == "product" and len(self.components) < 2:
            raise ValueError("product space needs at least two components")

    @classmethod
    def finite(cls, labels: Iterable[float]) -> "StateSpace":
        return cls("finite", alphabet=tuple(labels))

    @classmethod
    def unit_interval(cls) -> "StateSpace":
        return cls("unit_interval")

    @classmethod
    def real_line(cls) -> "StateSpace":
        return cls("real_line")

    @classmethod
    def product(cls, *components: "StateSpace") -> "StateSpace":
        return cls("product", components=tuple(components))

    @cached_property
    def axes(self) -> tuple["StateSpace", ...]:
        """Scalar coordinate spaces, flattened."""
        if self.kind != "product":
            return (self,)
        return tuple(ax for c in self.components for ax in c.axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def is_finite(self) -> bool:
        return all(ax.kind == "finite" for ax in self.axes)

    def as_points(self, x) -> np.ndarray:
        """Coerce to a float array of points: shape ``(k,)`` or ``(k, dim)``."""
        arr = np.asarray(x, dtype=float)
        if self.dim == 1:
            return arr.reshape(-1)
        return arr.reshape(-1, self.dim)

    def contains(self, x) -> np.ndarray:
        """Elementwise membership for an array of points."""
        arr = np.asarray(x, dtype=float)
        if self.dim == 1:
            return _axis_contains(self, arr)
        if arr.shape[-1] != self.dim:
            return np.zeros(arr.shape[:-1], dtype=bool)
        ok = np.ones(arr.shape[:-1], dtype=bool)
        for i, ax in enumerate(self.axes):
            ok &= _axis_contains(ax, arr[..., i])
        return ok

    def check(self, x) -> None:
        try:
            ok = bool(np.all(self.contains(x)))
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise DomainError(f"point(s) {x!r} outside {self}")

    def __str__(self) -> str:
        if self.kind == "finite":
            return "finite{" + ",".join(f"{a:g}" for a in self.alphabet) + "}"
        if self.kind == "product":
            return " x ".join(str(c) for c in self.components)
        return self.kind


def _axis_contains(ax: StateSpace, a: np.ndarray) -> np.ndarray:
    if ax.kind == "finite":
        return np.isin(a, np.asarray(ax.alphabet))
    if ax.kind == "unit_interval":
        return (a >= 0.0) & (a <= 1.0)
    return np.isfinite(a)


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A bounded measurable function on a state space.

    ``coordinate`` selects the axis a function acts on when the space is a
    product; the function itself is always scalar. Build instances with the
    module-level factories (:func:`indicator`, :func:`clamp_linear`, ...).
    """

    __test__ = False  # not a pytest class

    name: str
    space: StateSpace
    kind: str
    params: Mapping
    sup_norm: float
    lipschitz_constant: float | None = None
    coordinate: int | None = None

    @property
    def axis_space(self) -> StateSpace:
        return self.space.axes[self.coordinate or 0]

    def __call__(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if self.space.dim > 1:
            arr = arr[..., self.coordinate]
        return self.on_axis(arr)

    def on_axis(self, t) -> np.ndarray:
        """Evaluate on raw coordinate values (no domain check)."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "indicator":
            if p["labels"] is not None:
                return np.isin(t, np.asarray(p["labels"])).astype(float)
            lo, hi, lo_closed, hi_closed = p["interval"]
            above = t >= lo if lo_closed else t > lo
            below = t <= hi if hi_closed else t < hi
            return (above & below).astype(float)
        if self.kind == "clamp_linear":
            return np.clip(t, p["lo"], p["hi"])
        if self.kind == "trig":
            arg = 2.0 * math.pi * p["frequency"] * t
            return np.cos(arg) if p["phase"] == "cos" else np.sin(arg)
        if self.kind == "table":
            keys = np.asarray(p["keys"])
            vals = np.asarray(p["values"])
            order = np.argsort(keys)
            pos = np.clip(np.searchsorted(keys[order], t), 0, len(keys) - 1)
            hit = keys[order][pos] == t
            if not np.all(hit):
                raise DomainError(f"table function {self.name} undefined at {t[~hit]}")
            return vals[order][pos]
        if self.kind == "lipschitz_piecewise":
            return np.interp(t, p["knots"], p["values"])
        raise AssertionError(self.kind)

    def piecewise_linear(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Knots/values for continuous piecewise-linear kinds, constant outside."""
        if self.kind == "clamp_linear":
            lo, hi = self.params["lo"], self.params["hi"]
            return np.array([lo, hi]), np.array([lo, hi])
        if self.kind == "lipschitz_piecewise":
            return np.asarray(self.params["knots"]), np.asarray(self.params["values"])
        return None

    def breakpoints(self) -> list[float]:
        """Points where the function is not smooth (for quadrature)."""
        if self.kind == "indicator" and self.params["interval"] is not None:
            lo, hi = self.params["interval"][:2]
            return [v for v in (lo, hi) if math.isfinite(v)]
        pl = self.piecewise_linear()
        if pl is not None:
            return [float(k) for k in pl[0]]
        return []

    def __repr__(self) -> str:
        return f"TestFunction({self.name!r} on {self.space})"


def _lift(space: StateSpace, coordinate: int | None) -> tuple[StateSpace, int | None]:
    if space.dim > 1:
        if coordinate is None or not 0 <= coordinate < space.dim:
            raise ValueError("product-space test functions need a valid coordinate")
        return space.axes[coordinate], coordinate
    return space, None


def indicator(
    space: StateSpace,
    *,
    labels: Iterable[float] | None = None,
    interval: tuple[float, float, bool, bool] | None = None,
    coordinate: int | None = None,
    name: str | None = None,
) -> TestFunction:
    """Indicator of a label set (finite axes) or an interval ``(lo, hi, lo_closed, hi_closed)``."""
    ax, coordinate = _lift(space, coordinate)
    if (labels is None) == (interval is None):
        raise ValueError("give exactly one of labels / interval")
    lip = None
    if labels is not None:
        labels = tuple(sorted(float(v) for v in labels))
        if name is None:
            name = "1{" + ";".join(f"{v:g}" for v in labels) + "}"
        if ax.kind == "finite" and len(ax.alphabet) > 1:
            lip = 1.0 / float(np.min(np.diff(np.sort(ax.alphabet))))
    else:
        lo, hi, lc, hc = interval
        interval = (float(lo), float(hi), bool(lc), bool(hc))
        if name is None:
            name = f"1{'[' if lc else '('}{lo:g};{hi:g}{']' if hc else ')'}"
    if coordinate is not None:
        name = f"x{coordinate}:{name}"
    return TestFunction(
        name, space, "indicator",
        MappingProxyType({"labels": labels, "interval": interval}),
        sup_norm=1.0, lipschitz_constant=lip, coordinate=coordinate,
    )


def clamp_linear(space: StateSpace, lo: float, hi: float, *, coordinate: int | None = None,
                 name: str | None = None) -> TestFunction:
    """``x -> min(max(x, lo), hi)``; bounded and 1-Lipschitz."""
    _, coordinate = _lift(space, coordinate)
    if not lo < hi:
        raise ValueError("clamp_linear needs lo < hi")
    name = name or f"clamp[{lo:g};{hi:g}]"
    if coordinate is not None:
        name = f"x{coordinate}:{name}"
    return TestFunction(
        name, space, "clamp_linear", MappingProxyType({"lo": float(lo), "hi": float(hi)}),
        sup_norm=max(abs(lo), abs(hi)), lipschitz_constant=1.0, coordinate=coordinate,
    )


def trig(space: StateSpace, frequency: float, phase: str = "cos", *,
         coordinate: int | None = None) -> TestFunction:
    """``cos(2 pi frequency x)`` or ``sin(2 pi frequency x)``."""
    _, coordinate = _lift(space, coordinate)
    if phase not in ("cos", "sin"):
        raise ValueError("phase must be 'cos' or 'sin'")
    name = f"{phase}{frequency:g}"
    if coordinate is not None:
        name = f"x{coordinate}:{name}"
    return TestFunction(
        name, space, "trig", MappingProxyType({"frequency": float(frequency), "phase": phase}),
        sup_norm=1.0, lipschitz_constant=2.0 * math.pi * abs(frequency), coordinate=coordinate,
    )


def table(space: StateSpace, mapping: Mapping[float, float], *, coordinate: int | None = None,
          name: str | None = None) -> TestFunction:
    """Function given by a finite map on a finite axis (must cover the alphabet)."""
    ax, coordinate = _lift(space, coordinate)
    if ax.kind != "finite":
        raise ValueError("table functions live on finite axes")
    keys = tuple(float(k) for k in mapping)
    vals = tuple(float(v) for v in mapping.values())
    if set(keys) != set(ax.alphabet):
        raise ValueError("table must cover the alphabet exactly")
    order = np.argsort(keys)
    k_sorted, v_sorted = np.asarray(keys)[order], np.asarray(vals)[order]
    lip = float(np.max(np.abs(np.diff(v_sorted)) / np.diff(k_sorted))) if len(keys) > 1 else 0.0
    name = name or "table"
    if coordinate is not None:
        name = f"x{coordinate}:{name}"
    return TestFunction(
        name, space, "table", MappingProxyType({"keys": keys, "values": vals}),
        sup_norm=float(np.max(np.abs(vals))), lipschitz_constant=lip, coordinate=coordinate,
    )


def identity(space: StateSpace, *, coordinate: int | None = None) -> TestFunction:
    """The identity map, on finite axes or on [0, 1]."""
    ax, _ = _lift(space, coordinate)
    if ax.kind == "finite":
        return table(space, {a: a for a in ax.alphabet}, coordinate=coordinate, name="id")
    if ax.kind == "unit_interval":
        return clamp_linear(space, 0.0, 1.0, coordinate=coordinate, name="id")
    raise ValueError("identity is unbounded on the real line; use clamp_linear")


def lipschitz_piecewise(space: StateSpace, knots: Sequence[float], values: Sequence[float], *,
                        coordinate: int | None = None, name: str | None = None) -> TestFunction:
    """Linear interpolation through ``(knots, values)``, constant outside."""
    _, coordinate = _lift(space, coordinate)
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    if knots.ndim != 1 or len(knots) < 2 or len(knots) != len(values) or np.any(np.diff(knots) <= 0):
        raise ValueError("need >= 2 strictly increasing knots with matching values")
    lip = float(np.max(np.abs(np.diff(values)) / np.diff(knots)))
    name = name or "pl[" + ";".join(f"{k:g}" for k in knots) + "]"
    if coordinate is not None:
        name = f"x{coordinate}:{name}"
    return TestFunction(
        name, space, "lipschitz_piecewise",
        MappingProxyType({"knots": tuple(knots), "values": tuple(values)}),
        sup_norm=float(np.max(np.abs(values))), lipschitz_constant=lip, coordinate=coordinate,
    )


def check_invariants(f: TestFunction, points: int = GRID_POINTS, tol: float = 1e-12) -> bool:
    """Spot-check the sup-norm and Lipschitz bounds on a grid of the function's axis."""
    ax = f.axis_space
    if ax.kind == "finite":
        t = np.sort(np.asarray(ax.alphabet))
    elif ax.kind == "unit_interval":
        t = np.linspace(0.0, 1.0, points)
    else:
        t = np.linspace(-8.0, 8.0, points)
    v = f.on_axis(t)
    if np.any(np.abs(v) > f.sup_norm + tol):
        return False
    if f.lipschitz_constant is not None and len(t) > 1:
        dv = np.abs(v[:, None] - v[None, :])
        dt = np.abs(t[:, None] - t[None, :])
        if np.any(dv > f.lipschitz_constant * dt + 1e-9):
            return False
    return True


def evaluate(f: TestFunction, x) -> float:
    """``f(x)`` for a single point, with a domain check."""
    f.space.check(x)
    arr = np.asarray(x, dtype=float)
    if f.space.dim > 1 and arr.shape != (f.space.dim,):
        raise DomainError(f"expected a point of dimension {f.space.dim}")
    if f.space.dim == 1 and arr.ndim != 0:
        raise DomainError("expected a scalar point")
    return float(f(arr))


# ---------------------------------------------------------------------------
# Discrete measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    Weights must be non-negative and sum to one within ``WEIGHT_TOL``; they
    are never renormalized.
    """

    space: StateSpace
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = self.space.as_points(self.atoms).copy()
        weights = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if len(atoms) != len(weights):
            raise ValueError("atoms and weights differ in length")
        if len(weights) == 0:
            raise ValueError("a probability measure needs at least one atom")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and non-negative")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {math.fsum(weights)!r}, not 1")
        self.space.check(atoms)
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, space: StateSpace, x) -> "DiscreteMeasure":
        return cls(space, space.as_points([x]), [1.0])

    @classmethod
    def uniform(cls, space: StateSpace, atoms) -> "DiscreteMeasure":
        pts = space.as_points(atoms)
        return cls(space, pts, np.full(len(pts), 1.0 / len(pts)))

    def __len__(self) -> int:
        return len(self.weights)

    def mix(self, other: "DiscreteMeasure", t: float) -> "DiscreteMeasure":
        """``t * self + (1 - t) * other`` with coinciding atoms merged."""
        if other.space != self.space:
            raise SpaceMismatch("cannot mix measures on different spaces")
        if not 0.0 <= t <= 1.0:
            raise ValueError("mixing weight must lie in [0, 1]")
        atoms = np.concatenate([self.atoms, other.atoms])
        weights = np.concatenate([t * self.weights, (1.0 - t) * other.weights])
        return _merged(self.space, atoms, weights)

    def mass(self, x) -> float:
        """Weight of the atom at ``x`` (0 if ``x`` is not an atom)."""
        pt = np.asarray(x, dtype=float)
        hit = np.all(self.atoms == pt, axis=-1) if self.space.dim > 1 else self.atoms == pt
        return float(np.sum(self.weights[hit]))

    def __repr__(self) -> str:
        return f"DiscreteMeasure({len(self)} atoms on {self.space})"


def _merged(space: StateSpace, atoms: np.ndarray, weights: np.ndarray) -> DiscreteMeasure:
    axis = 0 if space.dim > 1 else None
    uniq, inverse = np.unique(atoms, axis=axis, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inverse.reshape(-1), weights)
    return DiscreteMeasure(space, uniq, merged)


def integrate(m: DiscreteMeasure, f: TestFunction) -> float:
    """``sum_i w_i f(atom_i)``."""
    if m.space != f.space:
        raise SpaceMismatch(f"measure on {m.space} but function on {f.space}")
    return float(np.dot(m.weights, f(m.atoms)))


def empirical_measure(points, space: StateSpace | None = None) -> DiscreteMeasure:
    """Uniform measure on the observed values (duplicates pooled)."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        raise ValueError("empirical measure of an empty sample")
    if space is None:
        if arr.ndim <= 1:
            space = StateSpace.real_line()
        else:
            space = StateSpace.product(*([StateSpace.real_line()] * arr.shape[-1]))
    pts = space.as_points(arr)
    axis = 0 if space.dim > 1 else None
    uniq, counts = np.unique(pts, axis=axis, return_counts=True)
    return DiscreteMeasure(space, uniq, counts / len(pts))


# ---------------------------------------------------------------------------
# Bounded Lipschitz distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BLResult:
    value: float
    exact: bool
    resolution: tuple[int, ...]

    @property
    def nodes(self) -> int:
        return int(np.prod(self.resolution))


def bl_axes(space: StateSpace, samples: Sequence[np.ndarray], max_nodes: int = GRID_POINTS
            ) -> tuple[list[np.ndarray], bool]:
    """Per-axis node sets covering the given point arrays.

    Exact (union of observed coordinates) when the product grid has at most
    ``max_nodes`` nodes; otherwise continuous axes are replaced by uniform
    grids on their bounded range, sized so the product fits in ``max_nodes``.
    """
    pts = [space.as_points(s).reshape(-1, space.dim) for s in samples]
    union = np.concatenate(pts, axis=0)
    uniq = [np.unique(union[:, i]) for i in range(space.dim)]
    if math.prod(len(u) for u in uniq) <= max_nodes:
        return uniq, True
    finite_size = math.prod(len(u) for u, ax in zip(uniq, space.axes) if ax.kind == "finite")
    n_cont = sum(ax.kind != "finite" for ax in space.axes)
    if n_cont == 0:
        return uniq, True
    r = max(2, int(math.floor((max_nodes / finite_size) ** (1.0 / n_cont) + 1e-9)))
    axes = []
    for u, ax in zip(uniq, space.axes):
        if ax.kind == "finite" or len(u) <= r:
            axes.append(u)
        else:
            lo, hi = (0.0, 1.0) if ax.kind == "unit_interval" else (float(u[0]), float(u[-1]))
            axes.append(np.linspace(lo, hi, r))
    return axes, False


def bin_to_grid(axes: Sequence[np.ndarray], points: np.ndarray) -> np.ndarray:
    """Flat index of the nearest grid node for each point (shape ``(k, dim)``)."""
    points = np.asarray(points, dtype=float).reshape(len(points), len(axes))
    multi = []
    for i, g in enumerate(axes):
        if len(g) == 1:
            multi.append(np.zeros(len(points), dtype=np.intp))
            continue
        mids = 0.5 * (g[1:] + g[:-1])
        multi.append(np.searchsorted(mids, points[:, i], side="left"))
    return np.ravel_multi_index(tuple(multi), tuple(len(g) for g in axes))


def grid_masses(axes: Sequence[np.ndarray], points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    out = np.zeros(math.prod(len(g) for g in axes))
    np.add.at(out, bin_to_grid(axes, points), weights)
    return out


def grid_bl(axes: Sequence[np.ndarray], p_mass: np.ndarray, q_mass: np.ndarray) -> float:
    """BL distance between two mass vectors on a product grid with the l1 metric.

    The sup over ``|f| <= 1, Lip(f) <= 1`` is a linear program in the node
    values of ``f``. On a product grid the l1 metric is the path metric of
    the axis-neighbour graph, so neighbour constraints suffice and the LP is
    exact for the grid points.
    """
    c = np.asarray(p_mass, dtype=float) - np.asarray(q_mass, dtype=float)
    if len(c) == 1 or np.max(np.abs(c)) == 0.0:
        return 0.0
    shape = tuple(len(g) for g in axes)
    idx = np.arange(len(c)).reshape(shape)
    lo_nodes, hi_nodes, gaps = [], [], []
    for a, g in enumerate(axes):
        if len(g) < 2:
            continue
        lo = np.take(idx, np.arange(len(g) - 1), axis=a)
        hi = np.take(idx, np.arange(1, len(g)), axis=a)
        gap_shape = [1] * len(shape)
        gap_shape[a] = len(g) - 1
        gap = np.broadcast_to(np.diff(g).reshape(gap_shape), lo.shape)
        lo_nodes.append(lo.ravel())
        hi_nodes.append(hi.ravel())
        gaps.append(gap.ravel())
    i = np.concatenate(lo_nodes)
    j = np.concatenate(hi_nodes)
    w = np.concatenate(gaps)
    m = len(i)
    rows = np.arange(2 * m)
    a_ub = sparse.csr_matrix(
        (np.concatenate([np.ones(2 * m), -np.ones(2 * m)]),
         (np.concatenate([rows, rows]), np.concatenate([i, j, j, i]))),
        shape=(2 * m, len(c)),
    )
    b_ub = np.concatenate([w, w])
    res = linprog(-c, A_ub=a_ub, b_ub=b_ub, bounds=(-1.0, 1.0), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"BL linear program failed: {res.message}")
    return float(min(2.0, max(0.0, -res.fun)))


def bl_distance_detailed(p: DiscreteMeasure, q: DiscreteMeasure,
                         max_nodes: int = GRID_POINTS) -> BLResult:
    if p.space != q.space:
        raise SpaceMismatch("bl_distance needs measures on the same space")
    axes, exact = bl_axes(p.space, [p.atoms, q.atoms], max_nodes)
    pm = grid_masses(axes, p.atoms.reshape(len(p), -1), p.weights)
    qm = grid_masses(axes, q.atoms.reshape(len(q), -1), q.weights)
    return BLResult(grid_bl(axes, pm, qm), exact, tuple(len(g) for g in axes))


def bl_distance(p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Bounded Lipschitz distance ``sup{|p(f) - q(f)| : |f| <= 1, Lip(f) <= 1}``.

    Uses the l1 metric on product spaces. Exact on finite spaces and whenever
    the atoms fit on a grid of at most ``GRID_POINTS`` nodes; otherwise
    computed on a uniform grid of that size (see :func:`bl_distance_detailed`).
    """
    return bl_distance_detailed(p, q).value


# ---------------------------------------------------------------------------
# Standard test suites
# ---------------------------------------------------------------------------


def _dyadic(space, lo, hi, depth, coordinate):
    out = []
    for j in range(1, depth + 1):
        edges = np.linspace(lo, hi, 2**j + 1)
        for k in range(2**j):
            last = k == 2**j - 1 and space.axes[coordinate or 0].kind == "unit_interval"
            out.append(indicator(space, interval=(edges[k], edges[k + 1], True, last),
                                 coordinate=coordinate))
    return out


def _axis_suite(space: StateSpace, coordinate: int | None) -> list[TestFunction]:
    ax = space.axes[coordinate or 0]
    if ax.kind == "finite":
        suite = [indicator(space, labels=[a], coordinate=coordinate) for a in ax.alphabet]
        suite.append(identity(space, coordinate=coordinate))
        return suite
    trigs = [trig(space, k, ph, coordinate=coordinate) for k in (1, 2, 3, 4) for ph in ("cos", "sin")]
    if ax.kind == "unit_interval":
        return (_dyadic(space, 0.0, 1.0, 4, coordinate) + trigs
                + [identity(space, coordinate=coordinate),
                   clamp_linear(space, 0.25, 0.75, coordinate=coordinate)])
    return ([indicator(space, interval=(-math.inf, 0.0, False, True), coordinate=coordinate)]
            + _dyadic(space, -4.0, 4.0, 4, coordinate) + trigs
            + [clamp_linear(space, -1.0, 1.0, coordinate=coordinate)])


def standard_test_suite(space: StateSpace) -> list[TestFunction]:
    """Deterministic finite family of test functions for ``space``.

    Finite axes: all singleton indicators plus the identity. Continuous axes:
    dyadic interval indicators to depth 4, cos/sin of frequency 1..4 and
    clamped-linear maps. Products: the union of the axis suites.
    """
    if space.dim == 1:
        return _axis_suite(space, None)
    return [f for i in range(space.dim) for f in _axis_suite(space, i)]


def find_function(space: StateSpace, name: str) -> TestFunction:
    """Look up a member of the standard suite by name."""
    for f in standard_test_suite(space):
        if f.name == name:
            return f
    raise KeyError(f"no test function {name!r} in the standard suite of {space}")
