"""Domain types for q-spin systems: interaction matrices, distributions over
``[q]^d``, product measures, external fields, graphs and pinnings.

Configurations are indexed in mixed radix with site 0 as the least
significant digit, so ``index(tau) = sum_i tau[i] * q**i``. Colors are
0-based everywhere.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-9
SYMMETRY_TOL = 0.0


class SpinImageError(Exception):
    """Base class for all package errors."""


class ValidationError(SpinImageError, ValueError):
    """An invariant of a domain object is violated.

    ``path`` names the offending field, e.g. ``"weights[3]"``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleError(SpinImageError, ValueError):
    """A computation would divide by a zero total mass."""


class ResourceLimitError(SpinImageError, RuntimeError):
    """An enumeration would exceed the configured state budget."""


class CheckFailure(SpinImageError, AssertionError):
    """A mathematical check did not hold."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_finite(a: np.ndarray, path: str) -> None:
    bad = np.flatnonzero(~np.isfinite(a.ravel()))
    if bad.size:
        raise ValidationError("non-finite entry", f"{path}[{int(bad[0])}]")


# ---------------------------------------------------------------------------
# configuration indexing
# ---------------------------------------------------------------------------


def config_index(tau: Sequence[int], q: int, d: int) -> int:
    """Mixed-radix index of ``tau`` with site 0 least significant."""
    tau = list(tau)
    if len(tau) != d:
        raise ValidationError(f"configuration has {len(tau)} sites, expected {d}", "tau")
    idx = 0
    for i in reversed(range(d)):
        c = int(tau[i])
        if not 0 <= c < q:
            raise ValidationError(f"color {c} outside [0, {q})", f"tau[{i}]")
        idx = idx * q + c
    return idx


def config_unindex(index: int, q: int, d: int) -> tuple[int, ...]:
    """Inverse of :func:`config_index`."""
    if not 0 <= index < q**d:
        raise ValidationError(f"index {index} outside [0, {q ** d})", "index")
    out = []
    for _ in range(d):
        index, c = divmod(index, q)
        out.append(c)
    return tuple(out)


def all_configs(q: int, d: int) -> np.ndarray:
    """Array of shape ``(q**d, d)``; row ``k`` is ``config_unindex(k)``."""
    idx = np.arange(q**d)
    return (idx[:, None] // (q ** np.arange(d))[None, :]) % q


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Symmetric nonnegative ``q x q`` matrix of pairwise spin weights."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {a.shape}", "entries")
        if a.shape[0] < 2:
            raise ValidationError("q must be at least 2", "q")
        _check_finite(a, "entries")
        neg = np.argwhere(a < 0)
        if neg.size:
            i, j = neg[0]
            raise ValidationError("negative weight", f"entries[{i}][{j}]")
        asym = np.argwhere(np.abs(a - a.T) > SYMMETRY_TOL)
        if asym.size:
            i, j = asym[0]
            raise ValidationError("matrix is not symmetric", f"entries[{i}][{j}]")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def q(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        return isinstance(other, InteractionMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def to_json(self) -> dict:
        return {"q": self.q, "entries": self.entries.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "InteractionMatrix":
        _require_keys(obj, ("q", "entries"), "InteractionMatrix")
        m = cls(_as_matrix(obj["entries"], "entries"))
        if int(obj["q"]) != m.q:
            raise ValidationError(f"q={obj['q']} but entries are {m.q}x{m.q}", "q")
        return m


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability vector over ``[q]^d`` in mixed-radix order."""

    q: int
    d: int
    weights: np.ndarray

    def __post_init__(self):
        q, d = int(self.q), int(self.d)
        if q < 1:
            raise ValidationError("q must be positive", "q")
        if d < 1:
            raise ValidationError("d must be positive", "d")
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size != q**d:
            raise ValidationError(f"expected {q ** d} weights, got {w.size}", "weights")
        _check_finite(w, "weights")
        neg = np.flatnonzero(w < 0)
        if neg.size:
            raise ValidationError("negative weight", f"weights[{int(neg[0])}]")
        total = math.fsum(w)
        if total == 0:
            raise ValidationError("zero-mass distribution", "weights")
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"not normalized (sum = {total!r})", "weights")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def from_weights(cls, q: int, d: int, weights) -> "JointDistribution":
        """Normalize nonnegative ``weights`` and wrap them."""
        w = np.asarray(weights, dtype=float).ravel()
        if w.size and np.all(np.isfinite(w)) and np.all(w >= 0):
            total = math.fsum(w)
            if total > 0:
                w = w / total
        return cls(q, d, w)

    @classmethod
    def point_mass(cls, tau: Sequence[int], q: int) -> "JointDistribution":
        d = len(tau)
        w = np.zeros(q**d)
        w[config_index(tau, q, d)] = 1.0
        return cls(q, d, w)

    @classmethod
    def uniform(cls, q: int, d: int) -> "JointDistribution":
        return cls(q, d, np.full(q**d, 1.0 / q**d))

    def tensor(self) -> np.ndarray:
        """View as an array of shape ``(q,)*d`` with axis ``i`` = site ``i``."""
        return self.weights.reshape((self.q,) * self.d, order="F")

    def __eq__(self, other):
        return (
            isinstance(other, JointDistribution)
            and (self.q, self.d) == (other.q, other.d)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.q, self.d, self.weights.tobytes()))

    def to_json(self) -> dict:
        return {"q": self.q, "d": self.d, "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "JointDistribution":
        _require_keys(obj, ("q", "d", "weights"), "JointDistribution")
        return cls(int(obj["q"]), int(obj["d"]), _as_vector(obj["weights"], "weights"))


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """``d`` marginal distributions on ``[q]``, stored as a ``(d, q)`` array."""

    marginals: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.marginals, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValidationError(f"expected a (d, q) array, got shape {m.shape}", "marginals")
        _check_finite(m, "marginals")
        neg = np.argwhere(m < 0)
        if neg.size:
            i, j = neg[0]
            raise ValidationError("negative weight", f"marginals[{i}][{j}]")
        for i, row in enumerate(m):
            total = math.fsum(row)
            if total == 0:
                raise ValidationError("zero-mass marginal", f"marginals[{i}]")
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValidationError(f"not normalized (sum = {total!r})", f"marginals[{i}]")
        object.__setattr__(self, "marginals", _frozen(m))

    @property
    def d(self) -> int:
        return self.marginals.shape[0]

    @property
    def q(self) -> int:
        return self.marginals.shape[1]

    @classmethod
    def iid(cls, p, d: int) -> "ProductMeasure":
        return cls(np.tile(np.asarray(p, dtype=float), (d, 1)))

    @classmethod
    def point_mass(cls, tau: Sequence[int], q: int) -> "ProductMeasure":
        m = np.zeros((len(tau), q))
        m[np.arange(len(tau)), list(tau)] = 1.0
        return cls(m)

    def __eq__(self, other):
        return isinstance(other, ProductMeasure) and np.array_equal(self.marginals, other.marginals)

    def __hash__(self):
        return hash(self.marginals.tobytes())

    def to_json(self) -> dict:
        return {"marginals": self.marginals.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ProductMeasure":
        _require_keys(obj, ("marginals",), "ProductMeasure")
        return cls(_as_matrix(obj["marginals"], "marginals"))


@dataclass(frozen=True, eq=False)
class ExternalField:
    """Nonnegative ``(d, q)`` tilt weights; every site keeps some positive weight."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError(f"expected a (d, q) array, got shape {w.shape}", "weights")
        _check_finite(w, "weights")
        neg = np.argwhere(w < 0)
        if neg.size:
            i, j = neg[0]
            raise ValidationError("negative weight", f"weights[{i}][{j}]")
        dead = np.flatnonzero(~np.any(w > 0, axis=1))
        if dead.size:
            raise ValidationError("site has no positive weight", f"weights[{int(dead[0])}]")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def q(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def ones(cls, d: int, q: int) -> "ExternalField":
        return cls(np.ones((d, q)))

    def __eq__(self, other):
        return isinstance(other, ExternalField) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ExternalField":
        _require_keys(obj, ("weights",), "ExternalField")
        return cls(_as_matrix(obj["weights"], "weights"))


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValidationError("graph needs at least one vertex", "n")
        seen = set()
        for k, e in enumerate(self.edges):
            if len(e) != 2:
                raise ValidationError("edge must have two endpoints", f"edges[{k}]")
            u, v = int(e[0]), int(e[1])
            for j, x in enumerate((u, v)):
                if not 0 <= x < n:
                    raise ValidationError(f"vertex {x} outside [0, {n})", f"edges[{k}][{j}]")
            if u == v:
                raise ValidationError("self-loop", f"edges[{k}]")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError("duplicate edge", f"edges[{k}]")
            seen.add(key)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def neighbors(self, v: int) -> list[int]:
        out = [b for a, b in self.edges if a == v] + [a for a, b in self.edges if b == v]
        return sorted(out)

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.n)), default=0)

    def remove_vertex(self, v: int) -> tuple["Graph", list[int]]:
        """``G - v`` with vertices relabelled; also returns old ids in new order."""
        keep = [u for u in range(self.n) if u != v]
        relabel = {u: i for i, u in enumerate(keep)}
        edges = tuple((relabel[a], relabel[b]) for a, b in self.edges if v not in (a, b))
        return Graph(self.n - 1, edges), keep

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    @classmethod
    def from_networkx(cls, g) -> "Graph":
        nodes = sorted(g.nodes())
        relabel = {u: i for i, u in enumerate(nodes)}
        return cls(len(nodes), tuple((relabel[a], relabel[b]) for a, b in g.edges()))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Graph":
        _require_keys(obj, ("n", "edges"), "Graph")
        edges = obj["edges"]
        if not isinstance(edges, list):
            raise ValidationError("expected a list of [u, v] pairs", "edges")
        return cls(int(obj["n"]), tuple(tuple(e) for e in edges))


@dataclass(frozen=True)
class Pinning:
    """Partial assignment ``vertex -> color``."""

    assignments: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for v, c in dict(self.assignments).items():
            v, c = int(v), int(c)
            if v < 0 or c < 0:
                raise ValidationError("negative vertex or color", f"assignments[{v}]")
            clean[v] = c
        object.__setattr__(self, "assignments", dict(sorted(clean.items())))

    def __hash__(self):
        return hash(tuple(self.assignments.items()))

    def check(self, n: int, q: int) -> None:
        for v, c in self.assignments.items():
            if v >= n:
                raise ValidationError(f"vertex {v} outside [0, {n})", f"assignments[{v}]")
            if c >= q:
                raise ValidationError(f"color {c} outside [0, {q})", f"assignments[{v}]")

    def to_json(self) -> dict:
        return {"assignments": {str(v): c for v, c in self.assignments.items()}}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Pinning":
        _require_keys(obj, ("assignments",), "Pinning")
        return cls({int(k): int(v) for k, v in obj["assignments"].items()})


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def validate(obj: Any) -> None:
    """Re-check every invariant of a core object; raise :class:`ValidationError`.

    Construction already validates, so this mostly matters for objects built
    with ``object.__new__`` or mutated through their arrays.
    """
    if isinstance(obj, InteractionMatrix):
        InteractionMatrix(np.array(obj.entries))
    elif isinstance(obj, JointDistribution):
        JointDistribution(obj.q, obj.d, np.array(obj.weights))
    elif isinstance(obj, ProductMeasure):
        ProductMeasure(np.array(obj.marginals))
    elif isinstance(obj, ExternalField):
        ExternalField(np.array(obj.weights))
    elif isinstance(obj, Graph):
        Graph(obj.n, obj.edges)
    elif isinstance(obj, Pinning):
        Pinning(obj.assignments)
    else:
        raise ValidationError(f"not a core type: {type(obj).__name__}")


def product_to_joint(nu: ProductMeasure) -> JointDistribution:
    """Joint weights ``prod_i nu_i(tau_i)`` in mixed-radix order."""
    q, d = nu.q, nu.d
    t = nu.marginals[0]
    for i in range(1, d):
        # site i is more significant: outer axis
        t = np.multiply.outer(nu.marginals[i], t).ravel()
    return JointDistribution.from_weights(q, d, t)


def as_joint(mu) -> JointDistribution:
    if isinstance(mu, JointDistribution):
        return mu
    if isinstance(mu, ProductMeasure):
        return product_to_joint(mu)
    raise ValidationError(f"expected a distribution, got {type(mu).__name__}")


def as_matrix(A) -> InteractionMatrix:
    return A if isinstance(A, InteractionMatrix) else InteractionMatrix(np.asarray(A, dtype=float))


# ---------------------------------------------------------------------------
# standard interaction families
# ---------------------------------------------------------------------------


def potts(q: int, beta: float) -> InteractionMatrix:
    """``1 1^T + (beta - 1) I``: ferromagnetic for beta > 1, antiferro below."""
    return InteractionMatrix(np.ones((q, q)) + (beta - 1.0) * np.eye(q))


def proper_colorings(q: int) -> InteractionMatrix:
    return InteractionMatrix(np.ones((q, q)) - np.eye(q))


def hardcore(q: int = 2) -> InteractionMatrix:
    """Hardcore matrix ``[[0, 1], [1, 1]]``, padded with all-ones rows for q > 2."""
    a = np.ones((q, q))
    a[0, 0] = 0.0
    return InteractionMatrix(a)


def ising(beta: float) -> InteractionMatrix:
    return InteractionMatrix(np.array([[beta, 1.0], [1.0, beta]]))


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _require_keys(obj, keys: Iterable[str], what: str) -> None:
    if not isinstance(obj, Mapping):
        raise ValidationError(f"{what} must be a JSON object")
    for k in keys:
        if k not in obj:
            raise ValidationError(f"missing field for {what}", k)


def _as_vector(x, path: str) -> np.ndarray:
    if not isinstance(x, list):
        raise ValidationError("expected a list of numbers", path)
    for i, v in enumerate(x):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError("expected a number", f"{path}[{i}]")
    return np.asarray(x, dtype=float)


def _as_matrix(x, path: str) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise ValidationError("expected a non-empty list of rows", path)
    rows = [_as_vector(r, f"{path}[{i}]") for i, r in enumerate(x)]
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValidationError(f"row has {len(r)} entries, expected {width}", f"{path}[{i}]")
    return np.vstack(rows)


_TYPES = {
    "InteractionMatrix": InteractionMatrix,
    "JointDistribution": JointDistribution,
    "ProductMeasure": ProductMeasure,
    "ExternalField": ExternalField,
    "Graph": Graph,
    "Pinning": Pinning,
}


def dumps(obj) -> str:
    """Canonical JSON text of a core object (or any JSON-able value)."""
    payload = obj.to_json() if hasattr(obj, "to_json") else obj
    return json.dumps(payload, sort_keys=True)


def loads(text: str, kind: str):
    """Parse ``text`` as the core type named ``kind``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from exc
    return _TYPES[kind].from_json(obj)
