"""Nonconvexity certificates for the BP image of the ``B(beta, A)`` family.

``B`` appends a special spin (index 0) that interacts with weight ``beta``
with itself and weight 1 with every original spin. On product measures the
special coordinate of ``F_B`` is bounded below by
``1 / (1 + max_b sum_c A[c, b]**d)``, with equality exactly at the
monochromatic point masses on the maximizing columns. A mixture of two such
point masses reaches the same bound but, when the two images differ, its
image is not the image of any product measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bp import bp, bp_product, bp_product_batch
from .core import (
    CheckFailure,
    InteractionMatrix,
    JointDistribution,
    ProductMeasure,
    ValidationError,
    as_matrix,
    config_index,
)
from .image import product_image_extremum
from .sampling import dirichlet_marginals, stream

SPECIAL = 0
MAXIMIZER_RTOL = 1e-10
EXACT_TOL = 1e-12
GAP_TOL = 1e-6
SEARCH_TOL = 1e-9
VERTEX_DIST = 1e-4


def build_B(beta: float, A) -> InteractionMatrix:
    """``[[beta, 1^T], [1, A]]``; spin 0 is the special spin."""
    A = as_matrix(A)
    if beta < 1:
        raise ValidationError(f"beta must be >= 1, got {beta}", "beta")
    q = A.q
    B = np.empty((q + 1, q + 1))
    B[0, 0] = beta
    B[0, 1:] = B[1:, 0] = 1.0
    B[1:, 1:] = A.entries
    return InteractionMatrix(B)


def column_power_sums(A, d: int) -> np.ndarray:
    """``sum_c A[c, b]**d`` for every column ``b``."""
    A = as_matrix(A)
    return np.array([math.fsum(col) for col in (A.entries**d).T])


def maximizer_set(A, d: int, tol: float = MAXIMIZER_RTOL) -> list[int]:
    """Spins whose column power sum is within relative ``tol`` of the maximum."""
    s = column_power_sums(A, d)
    top = s.max()
    return [int(b) for b in np.flatnonzero(s >= top - tol * abs(top))]


def extremal_value(A, d: int) -> float:
    """``1 / (1 + max_b sum_c A[c, b]**d)``."""
    return float(1.0 / (1.0 + column_power_sums(A, d).max()))


def distinct_pair(A, d: int, tol: float = MAXIMIZER_RTOL) -> Optional[tuple[int, int, int]]:
    """First ``(a1, a2, c)`` with ``a1, a2`` maximizers and ``A[c, a1] != A[c, a2]``."""
    A = as_matrix(A)
    M = maximizer_set(A, d, tol)
    for i, a1 in enumerate(M):
        for a2 in M[i + 1 :]:
            diff = np.flatnonzero(A.entries[:, a1] != A.entries[:, a2])
            if diff.size:
                return a1, a2, int(diff[0])
    return None


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    reasons: tuple[str, ...]

    def __bool__(self):
        return self.passed


def check_technical_conditions(A, d: int) -> ConditionReport:
    """Condition (a): ``A >= 1`` entrywise, strictly somewhere.
    Condition (b): two maximizing columns that differ in some row.
    """
    A = as_matrix(A)
    reasons = []
    a = A.entries
    if np.any(a < 1):
        i, j = np.argwhere(a < 1)[0]
        reasons.append(f"(a) entry [{i}][{j}] = {a[i, j]} < 1")
    elif not np.any(a > 1):
        reasons.append("(a) no entry exceeds 1")
    M = maximizer_set(A, d)
    if len(M) < 2:
        reasons.append(f"(b) maximizer set {M} has fewer than two spins")
    elif distinct_pair(A, d) is None:
        reasons.append(f"(b) all maximizer columns {M} are identical")
    return ConditionReport(not reasons, tuple(reasons))


def tilde_ratio(B, nu) -> float:
    """``(1 - F_{B,0}(nu)) / F_{B,0}(nu)``, evaluated by the product formula."""
    B = as_matrix(B)
    if not isinstance(nu, ProductMeasure):
        nu = ProductMeasure(nu)
    beta = B.entries[0, 0]
    A = B.entries[1:, 1:]
    m = nu.marginals
    special = m[:, 0]
    rest = m[:, 1:]
    terms = (special[:, None] + rest @ A.T) / (1.0 + (beta - 1.0) * special[:, None])
    if bp_product(B, nu)[SPECIAL] == 0:
        raise ValidationError("zero special coordinate", "nu")
    return float(terms.prod(axis=0).sum())


def zeta_mixture(zeta: dict, d: int, size: int, allowed: Optional[list[int]] = None) -> JointDistribution:
    """``sum_a zeta(a) delta_a^{(x) d}`` over ``[size]^d``.

    ``zeta`` maps spins (in the ``size``-spin space) to probabilities.
    """
    if allowed is not None:
        bad = [a for a, w in zeta.items() if w > 0 and a not in allowed]
        if bad:
            raise ValidationError(f"zeta puts mass on {bad}, outside the maximizer set", "zeta")
    w = np.zeros(size**d)
    for a, p in zeta.items():
        w[config_index([a] * d, size, d)] += p
    return JointDistribution.from_weights(size, d, w)


def _mono(a: int, size: int, d: int) -> JointDistribution:
    return JointDistribution.point_mass([a] * d, size)


def _mono_product(a: int, size: int, d: int) -> np.ndarray:
    m = np.zeros((d, size))
    m[:, a] = 1.0
    return m


# ---------------------------------------------------------------------------
# witness
# ---------------------------------------------------------------------------


@dataclass
class NonconvexityWitness:
    beta: float
    A: InteractionMatrix
    d: int
    B: InteractionMatrix
    maximizer_set: list[int]
    extremal_value: float
    distinct_pair: tuple[int, int, int, float]
    linearity_residual: float
    mixture_point: list[float]
    optimizer_report: dict
    seed: int
    restarts: int

    def to_json(self) -> dict:
        a1, a2, c, gap = self.distinct_pair
        return {
            "beta": self.beta,
            "A": self.A.to_json(),
            "d": self.d,
            "B": self.B.to_json(),
            "special_spin": SPECIAL,
            "maximizer_set": self.maximizer_set,
            "extremal_value": self.extremal_value,
            "distinct_pair": {"a1": a1, "a2": a2, "coordinate": c, "gap": gap},
            "linearity_residual": self.linearity_residual,
            "mixture_point": self.mixture_point,
            "optimizer_report": self.optimizer_report,
            "seed": self.seed,
            "restarts": self.restarts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NonconvexityWitness":
        try:
            p = obj["distinct_pair"]
            return cls(
                beta=float(obj["beta"]),
                A=InteractionMatrix.from_json(obj["A"]),
                d=int(obj["d"]),
                B=InteractionMatrix.from_json(obj["B"]),
                maximizer_set=[int(x) for x in obj["maximizer_set"]],
                extremal_value=float(obj["extremal_value"]),
                distinct_pair=(int(p["a1"]), int(p["a2"]), int(p["coordinate"]), float(p["gap"])),
                linearity_residual=float(obj["linearity_residual"]),
                mixture_point=[float(x) for x in obj["mixture_point"]],
                optimizer_report=dict(obj["optimizer_report"]),
                seed=int(obj["seed"]),
                restarts=int(obj["restarts"]),
            )
        except KeyError as exc:
            raise ValidationError("missing field in witness", str(exc.args[0])) from None


def _fail(clause: str, detail: str):
    raise CheckFailure(f"clause {clause} failed: {detail}")


def certify_nonconvexity(beta: float, A, d: int, budget: int = 64, seed: int = 0, n_random_zeta: int = 8) -> NonconvexityWitness:
    """Build and check a nonconvexity witness for ``B(beta, A)``.

    Clauses (i)-(iii) are exact arithmetic checks; clause (iv) is a
    multistart search and is recorded as search evidence only.
    """
    A = as_matrix(A)
    if beta < 1:
        raise ValidationError(f"beta must be >= 1, got {beta}", "beta")
    cond = check_technical_conditions(A, d)
    if not cond:
        raise CheckFailure("technical conditions fail: " + "; ".join(cond.reasons))
    B = build_B(beta, A)
    size = A.q + 1
    M = maximizer_set(A, d)
    ext = extremal_value(A, d)
    # spins of A are shifted by one inside B
    MB = [a + 1 for a in M]

    # (i) every monochromatic maximizer attains the bound
    for a in MB:
        val = bp(B, _mono(a, size, d))[SPECIAL]
        if abs(val - ext) > EXACT_TOL:
            _fail("(i)", f"F_special(delta_{a}) = {val!r} != {ext!r}")

    # (ii) linearity over mixtures of maximizers
    a1, a2, _ = distinct_pair(A, d)
    a1, a2 = a1 + 1, a2 + 1
    images = {a: bp(B, _mono(a, size, d)) for a in MB}
    zetas = [{a1: 0.5, a2: 0.5}, {a: 1.0 / len(MB) for a in MB}]
    rng = stream(seed, 0x5EED)
    for _ in range(n_random_zeta):
        w = rng.dirichlet(np.ones(len(MB)))
        zetas.append(dict(zip(MB, w)))
    lin = 0.0
    for z in zetas:
        lhs = bp(B, zeta_mixture(z, d, size, MB))
        rhs = sum(z[a] * images[a] for a in z)
        lin = max(lin, float(np.max(np.abs(lhs - rhs))))
    if lin > EXACT_TOL:
        _fail("(ii)", f"linearity residual {lin!r}")

    # (iii) the two extremal images differ
    diffs = np.abs(images[a1] - images[a2])
    c = int(np.argmax(diffs))
    gap = float(diffs[c])
    if gap <= GAP_TOL:
        _fail("(iii)", f"images of {a1} and {a2} differ by only {gap!r}")

    # (iv) search evidence: nothing beats the bound; minimizers are monochromatic
    obj = np.zeros(size)
    obj[SPECIAL] = 1.0
    res = product_image_extremum(B, d, obj, budget=budget, seed=seed)
    report = _optimizer_report(res, MB, size, d, ext)
    if report["min_value"] < ext - SEARCH_TOL:
        _fail("(iv)", f"search found F_special = {report['min_value']!r} below the bound {ext!r}")
    if report["max_minimizer_distance"] > VERTEX_DIST:
        _fail("(iv)", f"a minimizer lies {report['max_minimizer_distance']!r} from every monochromatic point mass")

    mix = 0.5 * images[a1] + 0.5 * images[a2]
    return NonconvexityWitness(
        beta=float(beta),
        A=A,
        d=d,
        B=B,
        maximizer_set=MB,
        extremal_value=ext,
        distinct_pair=(a1, a2, c, gap),
        linearity_residual=lin,
        mixture_point=mix.tolist(),
        optimizer_report=report,
        seed=seed,
        restarts=budget,
    )


def _optimizer_report(res, MB: list[int], size: int, d: int, ext: float) -> dict:
    vals = res.endpoint_values
    best = float(vals.min())
    minimizers = np.flatnonzero(vals <= best + SEARCH_TOL)
    dists = []
    for r in minimizers:
        nu = res.endpoints[r]
        dists.append(min(float(np.max(np.abs(nu - _mono_product(a, size, d)))) for a in MB))
    return {
        "kind": "stochastic search evidence, not a proof",
        "restarts": res.restarts,
        "iterations": res.iterations,
        "min_value": best,
        "bound": float(ext),
        "n_minimizers": int(minimizers.size),
        "max_minimizer_distance": max(dists),
        "argmin": res.argopt.to_json(),
    }


def sweep_lower_bound(B, d: int, n_samples: int = 10_000, seed: int = 0) -> float:
    """Smallest ``F_{B,0}(nu) - bound`` over random product measures.

    Half the draws are flat Dirichlet, half are concentrated (alpha = 0.05) so
    that near-vertex measures are also probed.
    """
    B = as_matrix(B)
    A = B.entries[1:, 1:]
    ext = extremal_value(A, d)
    half = n_samples // 2
    flat = dirichlet_marginals(stream(seed, 1), half, d, B.q)
    sharp = dirichlet_marginals(stream(seed, 2), n_samples - half, d, B.q, alpha=0.05)
    F = bp_product_batch(B, np.concatenate([flat, sharp]))
    return float((F[:, SPECIAL] - ext).min())


def verify_witness(witness: NonconvexityWitness | dict) -> dict:
    """Recompute every claim from ``(beta, A, d)`` and compare with the witness."""
    if isinstance(witness, dict):
        witness = NonconvexityWitness.from_json(witness)
    fresh = certify_nonconvexity(witness.beta, witness.A, witness.d, budget=witness.restarts, seed=witness.seed)
    checks = {
        "B": fresh.B == witness.B,
        "maximizer_set": fresh.maximizer_set == witness.maximizer_set,
        "extremal_value": bool(abs(fresh.extremal_value - witness.extremal_value) <= EXACT_TOL),
        "extremal_formula": bool(abs(witness.extremal_value - extremal_value(witness.A, witness.d)) <= EXACT_TOL),
        "distinct_pair": fresh.distinct_pair[:3] == witness.distinct_pair[:3]
        and abs(fresh.distinct_pair[3] - witness.distinct_pair[3]) <= EXACT_TOL,
        "linearity_residual": witness.linearity_residual <= EXACT_TOL,
        "mixture_point": bool(np.max(np.abs(np.array(fresh.mixture_point) - witness.mixture_point)) <= EXACT_TOL),
        "mixture_special": abs(witness.mixture_point[SPECIAL] - witness.extremal_value) <= EXACT_TOL,
        "search_bound": witness.optimizer_report["min_value"] >= witness.extremal_value - SEARCH_TOL,
        "search_minimizers": witness.optimizer_report["max_minimizer_distance"] <= VERTEX_DIST,
    }
    return {"pass": all(checks.values()), "checks": checks}
