"""Geometry of the BP image.

The image of all joint laws is the convex hull of the point-mass images
``F(delta_tau)``; the image of product measures is a subset that need not be
convex. This module computes the vertex images, the mixture weights that
express ``F(mu)`` over them, hull membership by linear programming, and a
multistart projected-gradient search over product measures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from .bp import DEFAULT_BUDGET, bp, normalize, product_messages
from .core import (
    InfeasibleError,
    ProductMeasure,
    ResourceLimitError,
    SpinImageError,
    ValidationError,
    all_configs,
    as_joint,
    as_matrix,
)
from .sampling import stream

MEMBER_TOL = 1e-9


@dataclass(frozen=True)
class VertexImages:
    """Images ``F(delta_tau)`` for feasible ``tau``, with the excluded indices."""

    q: int
    d: int
    indices: np.ndarray
    images: np.ndarray
    infeasible: np.ndarray

    def __len__(self):
        return len(self.indices)


def _messages_of_point_masses(A, d: int) -> np.ndarray:
    configs = all_configs(A.q, d)
    return np.prod(A.entries[:, configs], axis=2).T  # (q^d, q)


def vertex_images(A, d: int, budget: int = DEFAULT_BUDGET) -> VertexImages:
    """``F(delta_tau)`` for every ``tau``; all-zero messages are excluded but recorded."""
    A = as_matrix(A)
    if A.q**d > budget:
        raise ResourceLimitError(f"q^d = {A.q ** d} exceeds budget {budget}")
    g = _messages_of_point_masses(A, d)
    ok = g.max(axis=1) > 0
    idx = np.flatnonzero(ok)
    return VertexImages(A.q, d, idx, normalize(g[ok]), np.flatnonzero(~ok))


def mixture_weights(A, mu) -> np.ndarray:
    """Weights ``xi(tau) ∝ mu(tau) * sum_c prod_i A[c, tau_i]`` over configurations.

    ``F(mu) = sum_tau xi(tau) F(delta_tau)`` holds exactly.
    """
    A = as_matrix(A)
    mu = as_joint(mu)
    g = _messages_of_point_masses(A, mu.d)
    raw = mu.weights * g.sum(axis=1)
    total = math.fsum(raw)
    if total <= 0:
        raise InfeasibleError("infeasible input: mu is supported on zero-message configurations")
    return raw / total


def reconstruct(A, xi: np.ndarray, d: int) -> np.ndarray:
    """``sum_tau xi(tau) F(delta_tau)`` over configurations with positive weight."""
    A = as_matrix(A)
    g = _messages_of_point_masses(A, d)
    keep = xi > 0
    return xi[keep] @ normalize(g[keep])


def reconstruction_residual(A, mu) -> float:
    mu = as_joint(mu)
    xi = mixture_weights(A, mu)
    return float(np.max(np.abs(reconstruct(A, xi, mu.d) - bp(A, mu))))


@dataclass
class HullMembershipReport:
    point: np.ndarray
    is_member: bool
    weights: Optional[np.ndarray]
    max_violation: float
    tol: float = MEMBER_TOL

    def to_json(self) -> dict:
        return {
            "point": self.point.tolist(),
            "is_member": self.is_member,
            "weights": None if self.weights is None else self.weights.tolist(),
            "max_violation": self.max_violation,
            "tol": self.tol,
        }


def _simplex_fit(points: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize ``max |w @ points - target|`` over the weight simplex."""
    m, q = points.shape
    # variables: w (m), t
    c = np.zeros(m + 1)
    c[-1] = 1.0
    ones = np.ones((q, 1))
    A_ub = np.block([[points.T, -ones], [-points.T, -ones]])
    b_ub = np.concatenate([target, -target])
    A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * m + [(0, None)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SpinImageError(f"membership LP failed: {res.message}")
    w = _clean_weights(res.x[:m])
    err = float(np.max(np.abs(w @ points - target)))
    # active-set refinement on the LP support: exact for interior members
    support = np.flatnonzero(w > 0)
    if support.size:
        aug = np.vstack([points[support].T, np.ones(support.size)])
        ws, _ = nnls(aug, np.concatenate([target, [1.0]]))
        w2 = np.zeros(m)
        w2[support] = ws
        w2 = _clean_weights(w2)
        err2 = float(np.max(np.abs(w2 @ points - target)))
        if err2 < err:
            w, err = w2, err2
    return w, err


def _clean_weights(w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, 0.0)
    s = w.sum()
    return w / s if s > 0 else w


def hull_membership(point, A, d: int, tol: float = MEMBER_TOL, budget: int = DEFAULT_BUDGET) -> HullMembershipReport:
    """Decide whether ``point`` lies in the convex hull of the vertex images."""
    A = as_matrix(A)
    p = np.asarray(point, dtype=float).ravel()
    if p.size != A.q:
        raise ValidationError(f"point has {p.size} entries, expected {A.q}", "point")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValidationError("point is not on the probability simplex", "point")
    verts = vertex_images(A, d, budget)
    if len(verts) == 0:
        raise SpinImageError("no feasible vertex images")
    w, err = _simplex_fit(verts.images, p)
    full = np.zeros(A.q**d)
    full[verts.indices] = w
    member = err <= tol
    return HullMembershipReport(p, bool(member), full if member else None, err, tol)


# ---------------------------------------------------------------------------
# optimization over product measures
# ---------------------------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row (last axis) onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - theta, 0.0)


def _objective_and_grad(A: np.ndarray, w: np.ndarray, nu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``<w, F(nu)>`` and its gradient for a batch ``nu`` of shape ``(R, d, q)``.

    Points with an all-zero message give NaN, which never counts as an improvement.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return _objective_and_grad_raw(A, w, nu)


def _objective_and_grad_raw(A, w, nu):
    m = np.einsum("cb,rib->ric", A, nu)  # (R, d, q) indexed by target color c
    d = nu.shape[1]
    # leave-one-out products over sites
    left = np.ones_like(m)
    right = np.ones_like(m)
    for i in range(1, d):
        left[:, i] = left[:, i - 1] * m[:, i - 1]
        right[:, d - 1 - i] = right[:, d - i] * m[:, d - i]
    loo = left * right  # prod_{j != i} m_j
    P = loo[:, 0] * m[:, 0]  # (R, q)
    S = P.sum(axis=1, keepdims=True)
    F = P / S
    val = (F * w).sum(axis=1)
    # dF_c/dP_a = (delta_ca - F_c)/S  ->  d<w,F>/dP_a = (w_a - val)/S
    dP = (w[None, :] - val[:, None]) / S  # (R, q)
    # dP_a/dnu_i(b) = loo[i, a] * A[a, b]
    grad = np.einsum("ra,ria,ab->rib", dP, loo, A)
    return val, grad


@dataclass
class ExtremumResult:
    value: float
    argopt: ProductMeasure
    sense: str
    restarts: int
    iterations: int
    endpoints: np.ndarray = field(repr=False)
    endpoint_values: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "argopt": self.argopt.to_json(),
            "sense": self.sense,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "kind": "stochastic multistart estimate",
        }


def _starts(q: int, d: int, budget: int, seed: int) -> np.ndarray:
    starts = [np.full((d, q), 1.0 / q)]
    for c in range(q):
        v = np.zeros((d, q))
        v[:, c] = 1.0
        starts.append(v)
    k = 0
    while len(starts) < budget:
        rng = stream(seed, k)
        starts.append(rng.dirichlet(np.ones(q), size=d))
        k += 1
    return np.array(starts[:budget])


def product_image_extremum(
    A,
    d: int,
    objective,
    budget: int = 64,
    iterations: int = 200,
    maximize: bool = False,
    seed: int = 0,
    step: float = 1.0,
) -> ExtremumResult:
    """Optimize ``<objective, F(nu)>`` over product measures by multistart projected gradient.

    Starts are the uniform measure, each monochromatic point mass, then
    Dirichlet draws keyed by ``(seed, k)``; restart ``k`` is the same whatever
    the budget, so a larger budget never yields a worse incumbent. Each
    restart halves its step after a non-improving move. Endpoints are also
    compared against their per-site argmax rounding.

    The result is a search outcome, not a certificate.
    """
    A = as_matrix(A)
    w = np.asarray(objective, dtype=float).ravel()
    if w.size != A.q:
        raise ValidationError(f"objective has {w.size} entries, expected {A.q}", "objective")
    if budget < 1:
        raise ValidationError("budget must be at least 1", "budget")
    sign = -1.0 if maximize else 1.0
    a = A.entries
    ws = sign * w

    nu = _starts(A.q, d, budget, seed)
    val, grad = _objective_and_grad(a, ws, nu)
    eta = np.full(budget, step)
    for _ in range(iterations):
        cand = project_simplex(nu - eta[:, None, None] * grad)
        cval, cgrad = _objective_and_grad(a, ws, cand)
        better = cval < val
        nu = np.where(better[:, None, None], cand, nu)
        grad = np.where(better[:, None, None], cgrad, grad)
        val = np.where(better, cval, val)
        eta = np.where(better, eta, eta / 2)

    rounded = np.zeros_like(nu)
    np.put_along_axis(rounded, np.argmax(nu, axis=-1)[..., None], 1.0, axis=-1)
    rval, _ = _objective_and_grad(a, ws, rounded)
    take = rval <= val
    nu = np.where(take[:, None, None], rounded, nu)
    val = np.where(take, rval, val)

    # ties go to the lexicographically smallest serialization
    best = min(range(budget), key=lambda r: (val[r], nu[r].ravel().tolist()))
    return ExtremumResult(
        value=float(sign * val[best]),
        argopt=ProductMeasure(nu[best]),
        sense="max" if maximize else "min",
        restarts=budget,
        iterations=iterations,
        endpoints=nu,
        endpoint_values=sign * val,
    )
