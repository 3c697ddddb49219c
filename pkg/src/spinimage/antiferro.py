"""Product-measure solvability for ``A = v v^T - diag(D)`` models.

For such ``A`` the BP message is ``G_c(mu) = v_c^d Z E_xi[(1 - y_c)^{alpha_c}]``
where ``alpha`` is the color-count signature of a configuration, ``xi`` is its
``v``-weighted law and ``y = D / v**2``. A product measure with the same
image exists iff ``A^{-1} G^{1/d}`` is nonnegative, and the inverse has a
closed form by the Sherman-Morrison formula.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bp import gibbs, marginalize, normalize, unnormalized_message, bp, bp_product
from .core import (
    CheckFailure,
    Graph,
    InfeasibleError,
    InteractionMatrix,
    JointDistribution,
    ProductMeasure,
    ResourceLimitError,
    ValidationError,
    all_configs,
    as_joint,
    as_matrix,
    potts,
)
from .sampling import dirichlet_joint, stream

DECOMP_TOL = 1e-10
CRITERION_TOL = 1e-12
DUST = -1e-12
RCOND_MIN = 1e-10
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class RankOneMinusDiag:
    v: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        D = np.asarray(self.D, dtype=float)
        if v.ndim != 1 or D.shape != v.shape:
            raise ValidationError("v and D must be vectors of equal length", "v")
        if np.any(v <= 0):
            raise ValidationError("v must be strictly positive", "v")
        if np.any(D < 0) or np.any(D > v**2 * (1 + DECOMP_TOL)):
            raise ValidationError("need 0 <= D[c] <= v[c]**2", "D")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "D", D)

    @property
    def q(self) -> int:
        return len(self.v)

    @property
    def y(self) -> np.ndarray:
        return np.minimum(self.D / self.v**2, 1.0)

    def matrix(self) -> np.ndarray:
        return np.outer(self.v, self.v) - np.diag(self.D)

    def to_json(self) -> dict:
        return {"v": self.v.tolist(), "D": self.D.tolist(), "y": self.y.tolist()}


def decompose(A, tol: float = DECOMP_TOL, v=None, D=None) -> RankOneMinusDiag:
    """Recover ``(v, D)`` with ``A = v v^T - diag(D)``.

    For ``q >= 3`` ``v`` is read off the off-diagonal entries. For ``q = 2``
    the off-diagonals fix only ``v0 * v1``, so ``v`` and ``D`` must be given.
    """
    A = as_matrix(A)
    a = A.entries
    q = A.q
    if v is not None or D is not None:
        if v is None or D is None:
            raise ValidationError("give both v and D", "v")
        dec = RankOneMinusDiag(v, D)
    else:
        if q == 2:
            raise ValidationError("q = 2 decomposition is not unique; pass v and D explicitly", "v")
        off = a[~np.eye(q, dtype=bool)]
        if np.any(off <= 0):
            raise ValidationError("zero off-diagonal entry: decomposition unrecoverable", "entries")
        v = np.empty(q)
        for b in range(q):
            c, c2 = [x for x in range(q) if x != b][:2]
            v[b] = math.sqrt(a[b, c] * a[b, c2] / a[c, c2])
        D = v**2 - np.diag(a)
        D = np.where(np.abs(D) <= tol * v**2, 0.0, D)
        try:
            dec = RankOneMinusDiag(v, D)
        except ValidationError:
            raise ValidationError("not of rank-one-minus-diagonal form", "entries") from None
    if np.max(np.abs(dec.matrix() - a)) > tol * max(1.0, np.max(np.abs(a))):
        raise ValidationError("not of rank-one-minus-diagonal form", "entries")
    return dec


def potts_decomposition(q: int, beta: float) -> RankOneMinusDiag:
    """``1 1^T - (1 - beta) I`` with ``v = 1``; valid for ``0 <= beta <= 1``."""
    return RankOneMinusDiag(np.ones(q), np.full(q, 1.0 - beta))


# ---------------------------------------------------------------------------
# signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Composition:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValidationError("counts must be nonnegative", "counts")

    @property
    def d(self) -> int:
        return sum(self.counts)


def signatures(q: int, d: int) -> np.ndarray:
    """Color counts of every configuration, shape ``(q**d, q)``."""
    configs = all_configs(q, d)
    out = np.zeros((len(configs), q), dtype=np.int64)
    for c in range(q):
        out[:, c] = (configs == c).sum(axis=1)
    return out


def signature_distribution(mu, v=None) -> dict[tuple[int, ...], float]:
    """``xi(alpha) ∝ prod_b v[b]**alpha[b] * mu(sgn = alpha)``."""
    mu = as_joint(mu)
    v = np.ones(mu.q) if v is None else np.asarray(v, dtype=float)
    sig = signatures(mu.q, mu.d)
    raw = mu.weights * np.prod(v[None, :] ** sig, axis=1)
    total = math.fsum(raw)
    if total <= 0:
        raise InfeasibleError("zero-mass signature distribution")
    out: dict[tuple[int, ...], float] = {}
    for s, w in zip(map(tuple, sig.tolist()), raw):
        if w > 0:
            out[s] = out.get(s, 0.0) + float(w / total)
    return dict(sorted(out.items()))


def _xi_arrays(mu: JointDistribution, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    sig = signatures(mu.q, mu.d)
    raw = mu.weights * np.prod(v[None, :] ** sig, axis=1)
    Z = math.fsum(raw)
    if Z <= 0:
        raise InfeasibleError("zero-mass signature distribution")
    return sig, raw / Z, Z


def root_expectations(dec: RankOneMinusDiag, mu) -> np.ndarray:
    """``e_c = E_xi[(1 - y_c)**alpha_c]**(1/d)``."""
    mu = as_joint(mu)
    sig, xi, _ = _xi_arrays(mu, dec.v)
    base = 1.0 - dec.y
    vals = np.array([math.fsum(xi * base[c] ** sig[:, c]) for c in range(dec.q)])
    return vals ** (1.0 / mu.d)


@dataclass(frozen=True)
class CriterionResult:
    holds: bool
    slack: float
    lhs: float
    rhs: float

    def to_json(self) -> dict:
        return {"holds": self.holds, "slack": self.slack, "lhs": self.lhs, "rhs": self.rhs}


def iid_criterion(dec: RankOneMinusDiag, mu) -> CriterionResult:
    """``sum_c e_c / y_c >= (sum_c 1/y_c - 1) max_c e_c``."""
    y = dec.y
    if np.any(y <= 0):
        raise ValidationError("criterion undefined; use solve_product directly", "D")
    e = root_expectations(dec, mu)
    lhs = math.fsum(e / y)
    rhs = (math.fsum(1.0 / y) - 1.0) * float(e.max())
    slack = lhs - rhs
    return CriterionResult(bool(slack >= -CRITERION_TOL), slack, lhs, rhs)


def potts_slack(mu, beta: float) -> float:
    """``sum_c E[beta**alpha_c]**(1/d) - (q - 1 + beta) max_c E[beta**alpha_c]**(1/d)``.

    Equals ``(1 - beta)`` times the general criterion slack.
    """
    mu = as_joint(mu)
    sig, xi, _ = _xi_arrays(mu, np.ones(mu.q))
    e = np.array([math.fsum(xi * beta ** sig[:, c]) for c in range(mu.q)]) ** (1.0 / mu.d)
    return math.fsum(e) - (mu.q - 1 + beta) * float(e.max())


def sherman_morrison_solution(dec: RankOneMinusDiag, mu) -> np.ndarray:
    """``A^{-1} G(mu)^{1/d}`` in closed form, without forming ``A^{-1}``."""
    mu = as_joint(mu)
    y = dec.y
    if np.any(y <= 0):
        raise ValidationError("closed form needs y > 0", "D")
    _, _, Z = _xi_arrays(mu, dec.v)
    e = root_expectations(dec, mu)
    S = math.fsum(1.0 / y)
    inner = math.fsum(e / y) / (S - 1.0) - e
    return Z ** (1.0 / mu.d) * inner / (y * dec.v)


# ---------------------------------------------------------------------------
# linear-solve construction
# ---------------------------------------------------------------------------


@dataclass
class ProductSolution:
    nu: Optional[ProductMeasure]
    x: np.ndarray
    residual: Optional[float]
    rcond: float

    @property
    def found(self) -> bool:
        return self.nu is not None

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "nu": None if self.nu is None else self.nu.to_json(),
            "x": self.x.tolist(),
            "F_residual": self.residual,
            "rcond": self.rcond,
        }


def solve_product(A, mu) -> ProductSolution:
    """Product measure with ``F(nu) = F(mu)`` from ``x = A^{-1} G(mu)^{1/d}``.

    ``x`` is computed from the root scaled to max 1; entries down to -1e-12
    count as rounding and are clamped. A more negative entry means no
    i.i.d. product measure has the same image.
    """
    A = as_matrix(A)
    mu = as_joint(mu)
    a = A.entries
    rcond = 1.0 / np.linalg.cond(a, 1)
    if not rcond >= RCOND_MIN:
        raise ValidationError("interaction matrix not invertible; criterion path unavailable", "entries")
    G = unnormalized_message(A, mu)
    root = normalize(G) ** (1.0 / mu.d)
    root = root / root.max()
    x = np.linalg.solve(a, root)
    if np.any(x < DUST):
        return ProductSolution(None, x, None, float(rcond))
    x = np.maximum(x, 0.0)
    if x.sum() <= 0:
        return ProductSolution(None, x, None, float(rcond))
    nu = ProductMeasure.iid(x / x.sum(), mu.d)
    res = float(np.max(np.abs(bp(A, mu) - bp_product(A, nu))))
    if res > RESIDUAL_TOL:
        raise CheckFailure(f"product solution misses F(mu) by {res!r}")
    return ProductSolution(nu, x, res, float(rcond))


# ---------------------------------------------------------------------------
# antiferromagnetic Potts: tail condition and bulk experiment
# ---------------------------------------------------------------------------


def gamma_star(beta: float, eps: float) -> float:
    return min(1.0 - math.sqrt(beta) + eps, 0.1)


def tail_probabilities(mu, beta: float, eps: float) -> np.ndarray:
    """``Pr[#{i : tau_i = c} <= gamma* d / q]`` for every color ``c``."""
    mu = as_joint(mu)
    cut = gamma_star(beta, eps) * mu.d / mu.q
    sig = signatures(mu.q, mu.d)
    return np.array([math.fsum(mu.weights[sig[:, c] <= cut]) for c in range(mu.q)])


def tail_bound_check(mu, beta: float, eps: float) -> bool:
    return bool(np.all(tail_probabilities(mu, beta, eps) <= eps))


def in_uniqueness_range(q: int, d: int, beta: float) -> bool:
    return d >= 2 * q and max(0.0, 1.0 - q / (d + 1)) <= beta <= 1.0


def digest(mu: JointDistribution) -> str:
    return hashlib.sha256(np.ascontiguousarray(mu.weights).tobytes()).hexdigest()[:16]


def random_neighborhood_marginal(rng: np.random.Generator, A, q: int, d: int, budget: int) -> JointDistribution:
    """Exact ``mu_{G - r, N(r)}`` for a random graph with ``deg(r) = d``.

    Besides the root and its ``d`` neighbors, up to two extra vertices are
    added; the other edges are random, so every degree stays at most
    ``d + 1``. Vertex fields are drawn from ``[0.5, 2]``.
    """
    extra = int(rng.integers(0, 3))
    while extra and q ** (d + extra) > budget:
        extra -= 1
    n = d + 1 + extra
    edges = [(0, i) for i in range(1, d + 1)]
    p = rng.uniform(0.1, 0.5)
    deg = np.zeros(n, dtype=int)
    deg[0] = d
    deg[1 : d + 1] = 1
    for u in range(1, n):
        for w in range(u + 1, n):
            if rng.random() < p and deg[u] < d + 1 and deg[w] < d + 1:
                edges.append((u, w))
                deg[u] += 1
                deg[w] += 1
    graph = Graph(n, edges)
    fields = rng.uniform(0.5, 2.0, size=(n, q))
    sub, keep = graph.remove_vertex(0)
    mu = gibbs(sub, A, fields[keep], budget).distribution
    return marginalize(mu, [keep.index(u) for u in range(1, d + 1)])


@dataclass
class BulkExperimentReport:
    q: int
    d: int
    beta: float
    eps: float
    n_samples: int
    seed: int
    successes: int = 0
    failures: int = 0
    failure_exemplars: list = field(default_factory=list)
    max_F_residual: float = 0.0
    excluded: int = 0
    excluded_solved: int = 0
    families: dict = field(default_factory=lambda: {"dirichlet": 0, "gibbs_neighborhood": 0})
    out_of_range: bool = False

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.successes + self.failures == self.n_samples

    def to_json(self) -> dict:
        return {
            "parameters": {
                "q": self.q,
                "d": self.d,
                "beta": self.beta,
                "eps": self.eps,
                "n_samples": self.n_samples,
                "seed": self.seed,
                "gamma_star": gamma_star(self.beta, self.eps),
            },
            "successes": self.successes,
            "failures": self.failures,
            "failure_exemplars": self.failure_exemplars,
            "max_F_residual": self.max_F_residual,
            "excluded": self.excluded,
            "excluded_solved": self.excluded_solved,
            "families": self.families,
            "out_of_range_override": self.out_of_range,
            "pass": self.passed,
        }


def bulk_experiment(
    q: int,
    d: int,
    beta: float,
    eps: float,
    n_samples: int = 200,
    seed: int = 0,
    budget: int = 2**20,
    allow_out_of_range: bool = False,
    max_attempts: Optional[int] = None,
) -> BulkExperimentReport:
    """Draw ``mu`` passing the tail condition and try to solve each.

    Even draws are flat Dirichlet over ``[q]^d``, odd draws are Gibbs
    neighborhood marginals; draw ``k`` uses stream ``(seed, k)``. Draws that
    fail the tail condition are excluded from the count but still solved.
    ``allow_out_of_range`` runs outside the uniqueness range; such
    runs carry no theoretical guarantee.
    """
    if not (in_uniqueness_range(q, d, beta) or allow_out_of_range):
        raise ValidationError(
            f"(q={q}, d={d}, beta={beta}) outside d >= 2q and max(0, 1 - q/(d+1)) <= beta <= 1",
            "beta",
        )
    if not 0 <= eps <= 0.25:
        raise ValidationError("eps must be in [0, 1/4]", "eps")
    if q**d > budget:
        raise ResourceLimitError(f"q^d = {q ** d} exceeds budget {budget}")
    A = potts(q, beta)
    rep = BulkExperimentReport(q, d, beta, eps, n_samples, seed, out_of_range=not in_uniqueness_range(q, d, beta))
    max_attempts = max_attempts or 20 * n_samples
    k = 0
    while rep.successes + rep.failures < n_samples:
        if k >= max_attempts:
            raise ResourceLimitError(f"only {rep.successes + rep.failures} of {n_samples} draws passed the tail condition")
        rng = stream(seed, k)
        if k % 2 == 0:
            mu, fam = dirichlet_joint(rng, q, d), "dirichlet"
        else:
            mu, fam = random_neighborhood_marginal(rng, A, q, d, budget), "gibbs_neighborhood"
        k += 1
        sol = solve_product(A, mu)
        if not tail_bound_check(mu, beta, eps):
            rep.excluded += 1
            rep.excluded_solved += int(sol.found)
            continue
        rep.families[fam] += 1
        if sol.found:
            rep.successes += 1
            rep.max_F_residual = max(rep.max_F_residual, sol.residual)
        else:
            rep.failures += 1
            if len(rep.failure_exemplars) < 10:
                rep.failure_exemplars.append(digest(mu))
    return rep


# ---------------------------------------------------------------------------
# scalar inequalities
# ---------------------------------------------------------------------------


def weird_lhs(q: int, beta: float) -> float:
    """``(q-1)/log(1/beta) * log((q-1)/((q-1)-(1-beta)))``; 1 at ``beta = 1``."""
    if beta == 1:
        return 1.0
    return (q - 1) / math.log(1 / beta) * math.log((q - 1) / ((q - 1) - (1 - beta)))


def check_claim_weird(q_grid: Sequence[int] = range(2, 11), beta_grid: Optional[Sequence[float]] = None) -> dict:
    if beta_grid is None:
        beta_grid = [i / 100 for i in range(1, 100)]
    worst = (math.inf, None, None)
    for q in q_grid:
        for b in beta_grid:
            s = weird_lhs(q, b) - math.sqrt(b)
            if s < worst[0]:
                worst = (s, q, b)
    return {
        "claim": "weird",
        "points": len(q_grid) * len(beta_grid),
        "min_slack": worst[0],
        "argmin": {"q": worst[1], "beta": worst[2]},
        "pass": worst[0] >= -CRITERION_TOL,
    }


def xi_function(d: int, q: int, eps: float, beta: float) -> float:
    """``(q - 1) f(beta) / log(1/beta)`` for ``0 < beta < 1``."""
    f = math.log(eps * beta ** (-d / (10 * q)) + 1 - eps) / d - math.log(eps * beta ** (1 / (10 * q * (q - 1))) + 1 - eps)
    return (q - 1) * f / math.log(1 / beta)


def check_claim_insane(d: int, q: int, eps: float, beta_grid: Optional[Sequence[float]] = None, n: int = 200) -> dict:
    """Monotone nonincreasing on ``[1 - q/(d+1), 1)`` and at most ``eps`` at the left end."""
    if d < 2 * q or not 0 <= eps <= 0.25:
        raise ValidationError("need d >= 2q and 0 <= eps <= 1/4", "d")
    lo = 1 - q / (d + 1)
    if beta_grid is None:
        beta_grid = [lo + (1 - lo) * i / n for i in range(n)]
    vals = [xi_function(d, q, eps, b) for b in beta_grid]
    rise = max((b - a for a, b in zip(vals, vals[1:])), default=0.0)
    end = xi_function(d, q, eps, lo)
    return {
        "claim": "insane",
        "d": d,
        "q": q,
        "eps": eps,
        "endpoint": lo,
        "endpoint_value": end,
        "max_increase": rise,
        "monotone": rise <= CRITERION_TOL,
        "pass": rise <= CRITERION_TOL and end <= eps + CRITERION_TOL,
    }
