"""Influence matrices and sampled contraction rates.

``Psi[(r, b), (v, c)] = mu(v = c | r = b) - mu(v = c)`` under a pinned Gibbs
distribution. Since ``Psi = diag(mu)^{-1} (P - mu mu^T)`` with ``P`` the pair
marginals, it is similar to a positive semidefinite matrix and has a real
spectrum; this is checked numerically rather than assumed.

The contraction estimate samples the Jacobian of ``phi o F o phi^{-1}`` and
reports the largest induced norm seen. It is a lower bound on the supremum.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bp import DEFAULT_BUDGET, gibbs, marginalize, pinned
from .core import Graph, InfeasibleError, Pinning, ValidationError, as_matrix
from .sampling import stream

IMAG_TOL = 1e-8
FD_STEP = 1e-6
CS_STEP = 1e-20
DEFAULT_FLOOR = 1e-3
NORMS = ("l1", "l2", "linf")


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

_FORWARD = {"identity": lambda x: x, "log": np.log, "sqrt": np.sqrt}
_INVERSE = {"identity": lambda x: x, "log": np.exp, "sqrt": np.square}


@dataclass(frozen=True)
class Potential:
    kind: str = "identity"
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.kind not in _FORWARD:
            raise ValidationError(f"unknown potential {self.kind!r}", "potential")
        if not 0 < self.floor < 1:
            raise ValidationError("floor must lie in (0, 1)", "floor")

    def __call__(self, x):
        return _FORWARD[self.kind](x)

    def inverse(self, y):
        return _INVERSE[self.kind](y)

    @property
    def L(self) -> float:
        """``sup |phi|`` on ``[floor, 1]``."""
        return {"identity": 1.0, "log": -math.log(self.floor), "sqrt": 1.0}[self.kind]

    @property
    def L_prime(self) -> float:
        """``inf |phi'|`` on ``[floor, 1]``."""
        return {"identity": 1.0, "log": 1.0, "sqrt": 0.5}[self.kind]

    def to_json(self) -> dict:
        return {"kind": self.kind, "floor": self.floor, "L": self.L, "L_prime": self.L_prime}


# ---------------------------------------------------------------------------
# influence matrices
# ---------------------------------------------------------------------------


def _pinned_gibbs(graph: Graph, A, pinning: Optional[Pinning], fields, budget):
    mu = gibbs(graph, A, fields, budget).distribution
    return pinned(mu, pinning) if pinning is not None else mu


def influence_submatrix(graph: Graph, A, r: int, v: int, pinning: Optional[Pinning] = None, fields=None, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``Psi^{r -> v}`` by explicit conditioning; rows of colors with ``mu_r(b) = 0`` are zero."""
    A = as_matrix(A)
    pinning = pinning or Pinning({})
    for u in (r, v):
        if not 0 <= u < graph.n:
            raise ValidationError(f"vertex {u} outside [0, {graph.n})", "vertex")
        if u in pinning.assignments:
            raise ValidationError(f"vertex {u} is pinned", "vertex")
    mu = _pinned_gibbs(graph, A, pinning, fields, budget)
    base = marginalize(mu, [v]).weights
    mu_r = marginalize(mu, [r]).weights
    out = np.zeros((A.q, A.q))
    for b in range(A.q):
        if mu_r[b] > 0:
            cond = pinned(mu, Pinning({**pinning.assignments, r: b}))
            out[b] = marginalize(cond, [v]).weights - base
    return out


@dataclass
class InfluenceReport:
    vertices: list[int]
    q: int
    pinning: dict
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    lambda_max: float
    max_imag: float
    norms: dict

    def block(self, r: int, v: int) -> np.ndarray:
        i, j = self.vertices.index(r), self.vertices.index(v)
        q = self.q
        return self.matrix[i * q : (i + 1) * q, j * q : (j + 1) * q]

    @property
    def real_spectrum(self) -> bool:
        return self.max_imag <= IMAG_TOL

    def to_json(self) -> dict:
        return {
            "vertices": self.vertices,
            "q": self.q,
            "pinning": {str(k): v for k, v in sorted(self.pinning.items())},
            "matrix": self.matrix.tolist(),
            "lambda_max": self.lambda_max,
            "max_imag": self.max_imag,
            "real_spectrum": self.real_spectrum,
            "norms": self.norms,
        }


def influence_matrix(graph: Graph, A, pinning: Optional[Pinning] = None, fields=None, budget: int = DEFAULT_BUDGET) -> InfluenceReport:
    """All blocks over unpinned vertices, from one enumeration's pair marginals."""
    A = as_matrix(A)
    q = A.q
    pinning = pinning or Pinning({})
    pinning.check(graph.n, q)
    mu = _pinned_gibbs(graph, A, pinning, fields, budget)
    free = [u for u in range(graph.n) if u not in pinning.assignments]
    t = mu.tensor()
    n = graph.n
    single = {u: t.sum(axis=tuple(x for x in range(n) if x != u)) for u in free}
    m = len(free)
    Psi = np.zeros((m * q, m * q))
    for i, r in enumerate(free):
        pr = single[r]
        ok = pr > 0
        for j, v in enumerate(free):
            if r == v:
                blk = np.eye(q) - np.outer(np.ones(q), single[v])
            else:
                axes = tuple(x for x in range(n) if x not in (r, v))
                P = t.sum(axis=axes)
                if r > v:
                    P = P.T
                blk = np.zeros((q, q))
                blk[ok] = P[ok] / pr[ok, None] - single[v][None, :]
            blk[~ok] = 0.0
            Psi[i * q : (i + 1) * q, j * q : (j + 1) * q] = blk
    lam = np.linalg.eigvals(Psi)
    norms = {k: hybrid_norm(Psi, q, k) for k in NORMS}
    return InfluenceReport(
        vertices=free,
        q=q,
        pinning=dict(pinning.assignments),
        matrix=Psi,
        eigenvalues=lam,
        lambda_max=float(lam.real.max()),
        max_imag=float(np.abs(lam.imag).max()),
        norms=norms,
    )


# ---------------------------------------------------------------------------
# hybrid induced norms
# ---------------------------------------------------------------------------


def hybrid_norm(M: np.ndarray, q: int, norm: str = "linf", n_starts: int = 32, seed: int = 0) -> float:
    """Operator norm of ``M`` from ``max_v ||x_v||_K`` to ``max_r ||y_r||_K``.

    ``linf`` and ``l1`` are exact; ``l2`` is a multistart alternating ascent
    and so a lower bound.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] % q:
        raise ValidationError("matrix columns must split into q-blocks", "matrix")
    rows = M.shape[0] // q
    return max(_block_row_norm(M[i * q : (i + 1) * q], q, norm, n_starts, seed) for i in range(rows))


def _block_row_norm(R: np.ndarray, q: int, norm: str, n_starts: int, seed: int) -> float:
    """``sup ||sum_v R_v x_v||_K`` over ``||x_v||_K <= 1`` for one block row ``R = [R_1 ... R_m]``."""
    blocks = [R[:, j : j + q] for j in range(0, R.shape[1], q)]
    if norm == "linf":
        return float(np.abs(R).sum(axis=1).max())
    if norm == "l1":
        best = 0.0
        for s in itertools.product((1.0, -1.0), repeat=R.shape[0]):
            s = np.array(s)
            best = max(best, sum(float(np.abs(b.T @ s).max()) for b in blocks))
        return best
    if norm == "l2":
        rng = stream(seed, R.shape[0], R.shape[1])
        starts = [np.ones(R.shape[0])] + [rng.standard_normal(R.shape[0]) for _ in range(n_starts - 1)]
        best = 0.0
        for u in starts:
            u = u / np.linalg.norm(u)
            val = 0.0
            for _ in range(200):
                y = np.zeros(R.shape[0])
                for b in blocks:
                    g = b.T @ u
                    ng = np.linalg.norm(g)
                    if ng > 0:
                        y += b @ (g / ng)
                new = float(np.linalg.norm(y))
                if new == 0:
                    break
                u = y / new
                if new - val <= 1e-14 * max(1.0, new):
                    val = max(val, new)
                    break
                val = new
            best = max(best, val)
        return best
    raise ValidationError(f"unknown norm {norm!r}; choose from {NORMS}", "norm")


# ---------------------------------------------------------------------------
# contraction
# ---------------------------------------------------------------------------


def transformed_bp(A: np.ndarray, potential: Potential, x: np.ndarray) -> np.ndarray:
    """``phi(F(phi^{-1}(x_1), ..., phi^{-1}(x_d)))`` for ``x`` of shape ``(..., d, q)``.

    Scales by the entry with the largest real part before summing, so equal
    entries give exactly ``1/q`` and the map stays analytic for complex steps.
    """
    p = potential.inverse(x)
    P = np.prod(np.einsum("cb,...ib->...ic", A, p), axis=-2)
    ref = np.take_along_axis(P, np.argmax(P.real, axis=-1)[..., None], axis=-1)
    r = P / ref
    return potential(r / r.sum(axis=-1, keepdims=True))



def jacobian_fd(A: np.ndarray, potential: Potential, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian, shape ``(n, q, d, q)``."""
    n, d, q = x.shape
    J = np.empty((n, q, d, q))
    for i in range(d):
        for b in range(q):
            e = np.zeros_like(x)
            e[:, i, b] = h
            J[:, :, i, b] = (transformed_bp(A, potential, x + e) - transformed_bp(A, potential, x - e)) / (2 * h)
    return J


def jacobian_complex_step(A: np.ndarray, potential: Potential, x: np.ndarray, h: float = CS_STEP) -> np.ndarray:
    n, d, q = x.shape
    J = np.empty((n, q, d, q))
    for i in range(d):
        for b in range(q):
            z = x.astype(complex)
            z[:, i, b] += 1j * h
            J[:, :, i, b] = transformed_bp(A, potential, z).imag / h
    return J


def sample_messages(rng: np.random.Generator, n: int, d: int, q: int, floor: float) -> np.ndarray:
    """``(1 - q floor) Dirichlet(1) + floor``, entries in ``[floor, 1 - (q-1) floor]``."""
    if q * floor >= 1:
        raise ValidationError("floor too large for q", "floor")
    return (1 - q * floor) * rng.dirichlet(np.ones(q), size=(n, d)) + floor


@dataclass
class ContractionReport:
    A: list
    delta: int
    potential: Potential
    norm: str
    estimate: float
    per_degree: dict
    n_samples: int
    resampled: int
    fd_vs_complex_step: float

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "delta": self.delta,
            "potential": self.potential.to_json(),
            "norm": self.norm,
            "estimate": self.estimate,
            "max_one_minus_delta": self.estimate,
            "per_degree": {str(k): v for k, v in self.per_degree.items()},
            "n_samples": self.n_samples,
            "resampled": self.resampled,
            "fd_vs_complex_step": self.fd_vs_complex_step,
            "kind": "sampled lower bound on the supremum, not a certificate",
        }


def contraction_estimate(
    A,
    delta: int,
    potential: Potential | str = "identity",
    norm: str = "linf",
    n_samples: int = 1000,
    seed: int = 0,
    floor: float = DEFAULT_FLOOR,
) -> ContractionReport:
    """Max over sampled points and ``1 <= d < delta`` of the induced Jacobian norm."""
    A = as_matrix(A)
    if isinstance(potential, str):
        potential = Potential(potential, floor)
    if norm not in NORMS:
        raise ValidationError(f"unknown norm {norm!r}; choose from {NORMS}", "norm")
    if delta < 2:
        raise ValidationError("delta must be at least 2", "delta")
    if n_samples < 1:
        raise ValidationError("n_samples must be positive", "n_samples")
    a = A.entries
    q = A.q
    per_degree = {}
    resampled = 0
    cs_gap = 0.0
    for d in range(1, delta):
        rng = stream(seed, d)
        p = sample_messages(rng, n_samples, d, q, potential.floor)
        x = potential(p)
        with np.errstate(all="ignore"):
            J = jacobian_fd(a, potential, x)
        bad = ~np.isfinite(J).all(axis=(1, 2, 3))
        tries = 0
        while bad.any():
            if tries >= 100:
                raise InfeasibleError("potential undefined at sampled points after resampling")
            p[bad] = sample_messages(rng, int(bad.sum()), d, q, potential.floor)
            x = potential(p)
            with np.errstate(all="ignore"):
                J[bad] = jacobian_fd(a, potential, x[bad])
            resampled += int(bad.sum())
            bad = ~np.isfinite(J).all(axis=(1, 2, 3))
            tries += 1
        k = min(n_samples, 100)
        Jc = jacobian_complex_step(a, potential, x[:k])
        scale = np.maximum(np.abs(Jc).max(axis=(1, 2, 3)), 1e-300)
        cs_gap = max(cs_gap, float((np.abs(J[:k] - Jc).max(axis=(1, 2, 3)) / scale).max()))
        vals = [_block_row_norm(J[s].reshape(q, d * q), q, norm, 8, seed) for s in range(n_samples)]
        per_degree[d] = float(max(vals))
    return ContractionReport(
        A=a.tolist(),
        delta=delta,
        potential=potential,
        norm=norm,
        estimate=max(per_degree.values()),
        per_degree=per_degree,
        n_samples=n_samples,
        resampled=resampled,
        fd_vs_complex_step=cs_gap,
    )
