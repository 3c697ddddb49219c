"""Belief-propagation functional and exact Gibbs enumeration on small graphs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    ExternalField,
    Graph,
    InfeasibleError,
    InteractionMatrix,
    JointDistribution,
    Pinning,
    ProductMeasure,
    ResourceLimitError,
    ValidationError,
    all_configs,
    as_joint,
    as_matrix,
)

#: default enumeration budget: n * log2(q) <= 24 bits of state
DEFAULT_BUDGET = 2**24


def normalize(g: np.ndarray, what: str = "message") -> np.ndarray:
    """Scale a nonnegative vector (or rows of a matrix) to sum 1.

    Dividing by the maximum first makes equal entries map to exactly ``1/q``.
    """
    g = np.asarray(g, dtype=float)
    top = np.max(g, axis=-1, keepdims=True)
    if np.any(top <= 0):
        raise InfeasibleError(f"infeasible input: all-zero {what}")
    r = g / top
    return r / r.sum(axis=-1, keepdims=True)


def _check_q(A: InteractionMatrix, q: int) -> None:
    if A.q != q:
        raise ValidationError(f"dimension mismatch: matrix has q={A.q}, distribution has q={q}", "q")


def unnormalized_message(A, mu) -> np.ndarray:
    """``G_c(mu) = E_{tau ~ mu} prod_i A[c, tau_i]`` for every color ``c``."""
    A = as_matrix(A)
    mu = as_joint(mu)
    _check_q(A, mu.q)
    support = np.flatnonzero(mu.weights > 0)
    q, d = mu.q, mu.d
    digits = (support[:, None] // (q ** np.arange(d))[None, :]) % q
    # (q, |supp|, d) -> product over sites
    prods = np.prod(A.entries[:, digits], axis=2)
    return prods @ mu.weights[support]


def bp(A, mu) -> np.ndarray:
    """BP marginal ``F_A(mu)``: the normalized message."""
    return normalize(unnormalized_message(A, mu))


def product_messages(A, marginals: np.ndarray) -> np.ndarray:
    """Factorized message ``prod_i (A nu_i)_c`` for a stack of product measures.

    ``marginals`` has shape ``(..., d, q)``; the result has shape ``(..., q)``.
    Works for complex input too (used for complex-step derivatives).
    """
    m = np.einsum("cb,...ib->...ic", np.asarray(A.entries), marginals)
    return np.prod(m, axis=-2)


def bp_product(A, nu) -> np.ndarray:
    """``F_A`` on a product measure via the factorized form."""
    A = as_matrix(A)
    if not isinstance(nu, ProductMeasure):
        nu = ProductMeasure(nu)
    _check_q(A, nu.q)
    return normalize(product_messages(A, nu.marginals))


def bp_product_batch(A, marginals: np.ndarray) -> np.ndarray:
    """Vectorized ``F_A`` over an array of product measures ``(n, d, q)``."""
    A = as_matrix(A)
    return normalize(product_messages(A, np.asarray(marginals, dtype=float)))


def tilt(field: ExternalField, mu) -> JointDistribution:
    """``field * mu``: reweight each configuration by ``prod_i field[i, tau_i]``."""
    mu = as_joint(mu)
    if (field.d, field.q) != (mu.d, mu.q):
        raise ValidationError(
            f"dimension mismatch: field is {field.d}x{field.q}, distribution is over [{mu.q}]^{mu.d}",
            "weights",
        )
    t = mu.tensor()
    for i in range(mu.d):
        shape = [1] * mu.d
        shape[i] = mu.q
        t = t * field.weights[i].reshape(shape)
    w = t.ravel(order="F")
    total = math.fsum(w)
    if total <= 0:
        raise InfeasibleError("field annihilates distribution")
    return JointDistribution(mu.q, mu.d, w / total)


def marginalize(mu, sites: Sequence[int]) -> JointDistribution:
    """Exact marginal on ``sites``; output site ``k`` is input site ``sites[k]``."""
    mu = as_joint(mu)
    sites = [int(s) for s in sites]
    if not sites:
        raise ValidationError("empty site subset", "sites")
    if len(set(sites)) != len(sites) or any(not 0 <= s < mu.d for s in sites):
        raise ValidationError(f"sites must be distinct and in [0, {mu.d})", "sites")
    t = mu.tensor()
    other = tuple(i for i in range(mu.d) if i not in sites)
    kept = sorted(sites)
    m = t.sum(axis=other) if other else t
    m = np.transpose(m, [kept.index(s) for s in sites])
    return JointDistribution.from_weights(mu.q, len(sites), m.ravel(order="F"))


def site_marginals(mu) -> np.ndarray:
    """All single-site marginals as a ``(d, q)`` array."""
    mu = as_joint(mu)
    t = mu.tensor()
    out = np.empty((mu.d, mu.q))
    for i in range(mu.d):
        out[i] = t.sum(axis=tuple(j for j in range(mu.d) if j != i))
    return out


# ---------------------------------------------------------------------------
# Gibbs distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GibbsResult:
    distribution: JointDistribution
    Z: float

    @property
    def log_Z(self) -> float:
        return math.log(self.Z)

    def marginals(self) -> np.ndarray:
        return site_marginals(self.distribution)


def _check_budget(q: int, n: int, budget: int) -> None:
    if q**n > budget:
        raise ResourceLimitError(f"q^n = {q}^{n} = {q ** n} states exceeds budget {budget}")


def gibbs_weights(graph: Graph, A, fields: Optional[np.ndarray] = None, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Unnormalized Gibbs weights as an ``(q,)*n`` tensor (axis ``v`` = vertex ``v``)."""
    A = as_matrix(A)
    q, n = A.q, graph.n
    _check_budget(q, n, budget)
    t = np.ones((q,) * n)
    for u, v in graph.edges:
        shape = [1] * n
        shape[u] = shape[v] = q
        # u < v, so A's row axis lands on u and column axis on v
        t = t * A.entries.reshape(shape)
    if fields is not None:
        fields = np.asarray(fields, dtype=float)
        if fields.shape != (n, q):
            raise ValidationError(f"fields must have shape ({n}, {q}), got {fields.shape}", "fields")
        for v in range(n):
            shape = [1] * n
            shape[v] = q
            t = t * fields[v].reshape(shape)
    return t


def gibbs(graph: Graph, A, fields=None, budget: int = DEFAULT_BUDGET) -> GibbsResult:
    """Exact Gibbs distribution by enumeration, with the unnormalized ``Z``.

    ``Z`` is a compensated sum over configurations in mixed-radix order, so it
    does not depend on how the weights were produced.
    """
    if isinstance(fields, ExternalField):
        fields = fields.weights
    t = gibbs_weights(graph, A, fields, budget)
    w = t.ravel(order="F")
    Z = math.fsum(w)
    if Z <= 0:
        raise InfeasibleError("no feasible configuration")
    q = as_matrix(A).q
    return GibbsResult(JointDistribution(q, graph.n, w / Z), Z)


def pinned(mu: JointDistribution, pinning: Pinning) -> JointDistribution:
    """Condition ``mu`` on the pinning; raise if the event has zero mass."""
    pinning.check(mu.d, mu.q)
    if not pinning.assignments:
        return mu
    t = np.array(mu.tensor())
    for v, c in pinning.assignments.items():
        idx = [slice(None)] * mu.d
        mask = np.ones(mu.q, dtype=bool)
        mask[c] = False
        idx[v] = mask
        t[tuple(idx)] = 0.0
    w = t.ravel(order="F")
    total = math.fsum(w)
    if total <= 0:
        raise InfeasibleError(f"infeasible pinning {pinning.assignments}")
    return JointDistribution(mu.q, mu.d, w / total)


def neighborhood_marginal(graph: Graph, A, v: int, fields=None, budget: int = DEFAULT_BUDGET) -> JointDistribution:
    """``mu_{G - v, N(v)}``: joint law of ``v``'s neighbors after deleting ``v``.

    Neighbors appear in increasing vertex order.
    """
    nbrs = graph.neighbors(v)
    if not nbrs:
        raise ValidationError(f"vertex {v} has no neighbors", "vertex")
    sub, keep = graph.remove_vertex(v)
    sub_fields = None
    if fields is not None:
        sub_fields = np.asarray(fields, dtype=float)[keep]
    mu = gibbs(sub, A, sub_fields, budget).distribution
    return marginalize(mu, [keep.index(u) for u in nbrs])


def check_vertex_recursion(graph: Graph, A, v: int, fields=None, budget: int = DEFAULT_BUDGET) -> float:
    """Sup-norm gap between ``mu_{G,v}`` and ``F_{A,d}(mu_{G-v,N(v)})``.

    The two sides come from separate enumerations. A field on ``v`` itself
    tilts the BP output.
    """
    A = as_matrix(A)
    if isinstance(fields, ExternalField):
        fields = fields.weights
    if not 0 <= v < graph.n:
        raise ValidationError(f"vertex {v} outside [0, {graph.n})", "vertex")
    if graph.degree(v) < 1:
        raise ValidationError(f"vertex {v} has degree 0", "vertex")
    lhs = gibbs(graph, A, fields, budget).marginals()[v]
    nb = neighborhood_marginal(graph, A, v, fields, budget)
    g = unnormalized_message(A, nb)
    if fields is not None:
        g = g * np.asarray(fields, dtype=float)[v]
    rhs = normalize(g)
    return float(np.max(np.abs(lhs - rhs)))


def connected_graphs(max_n: int = 6, min_n: int = 2) -> list[Graph]:
    """All connected graphs (up to isomorphism) with ``min_n..max_n`` vertices."""
    import networkx as nx

    if max_n > 7:
        raise ValidationError("graph atlas covers at most 7 vertices", "max_n")
    out = []
    for g in nx.graph_atlas_g():
        if min_n <= g.number_of_nodes() <= max_n and nx.is_connected(g):
            out.append(Graph.from_networkx(g))
    return out
