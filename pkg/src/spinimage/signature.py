"""Interaction matrices with prescribed eigenvalue signatures.

The block construction below gives ``A >= 1`` whose ``B(beta, A)`` has
exactly ``k + 2`` positive and ``q - k - 1`` negative eigenvalues, while
every column power sum of ``A`` is equal, so all spins are maximizers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CheckFailure, InteractionMatrix, ValidationError, as_matrix
from .counterexample import build_B, column_power_sums

DEFAULT_GAMMA = 0.999
SIGN_TOL = 1e-9
SYM_TOL = 1e-12
MAX_GAMMA_PUSH = 20


@dataclass(frozen=True)
class EigenSignature:
    n_pos: int
    n_zero: int
    n_neg: int
    eigenvalues: tuple[float, ...]
    tol: float

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n_pos, self.n_zero, self.n_neg

    def to_json(self) -> dict:
        return {
            "n_pos": self.n_pos,
            "n_zero": self.n_zero,
            "n_neg": self.n_neg,
            "eigenvalues": list(self.eigenvalues),
            "tol": self.tol,
        }


def eigen_signature(M, tol: float = SIGN_TOL) -> EigenSignature:
    """Inertia of a symmetric matrix; zero means ``|lambda| <= tol * spectral radius``."""
    M = np.asarray(M.entries if isinstance(M, InteractionMatrix) else M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("matrix must be square", "M")
    if np.max(np.abs(M - M.T), initial=0.0) > SYM_TOL:
        raise ValidationError("matrix is not symmetric", "M")
    lam = np.linalg.eigvalsh(M)
    cut = tol * np.max(np.abs(lam), initial=0.0)
    pos = int(np.sum(lam > cut))
    neg = int(np.sum(lam < -cut))
    return EigenSignature(pos, len(lam) - pos - neg, neg, tuple(float(x) for x in lam), tol)


def _block_matrix(q: int, k: int, beta: float, gamma: float, t: float) -> np.ndarray:
    A = np.ones((q, q))
    A[:k, :k] += (beta - 1.0) * np.eye(k)
    A[k:, k:] = t * (np.ones((q - k, q - k)) + (gamma - 1.0) * np.eye(q - k))
    return A


def construct_signature_instance(q: int, d: int, beta: float, k: int, gamma: float = DEFAULT_GAMMA) -> tuple[InteractionMatrix, float, float]:
    """Block matrix with ``t**d = (beta**d + m) / (gamma**d + m)``, ``m = q - k - 1``.

    If ``t * gamma <= 1`` then ``gamma`` is moved halfway to 1, up to 20
    times. Returns ``(A, t, gamma)`` with the ``gamma`` actually used.
    """
    if q < 2 or d < 2:
        raise ValidationError("need q >= 2 and d >= 2", "q")
    if not beta > 1:
        raise ValidationError(f"beta must exceed 1, got {beta}", "beta")
    if not 0 <= k <= q - 1:
        raise ValidationError(f"k must be in [0, {q - 1}], got {k}", "k")
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma must be in (0, 1), got {gamma}", "gamma")
    m = q - k - 1
    for _ in range(MAX_GAMMA_PUSH + 1):
        t = ((beta**d + m) / (gamma**d + m)) ** (1.0 / d)
        if t * gamma > 1:
            break
        gamma = (1.0 + gamma) / 2
    else:
        raise CheckFailure("gamma too small for this (beta, d); increase gamma toward 1")
    A = _block_matrix(q, k, beta, gamma, t)
    if np.any(A < 1) or not np.any(A > 1):
        raise CheckFailure("constructed matrix is not >= 1 with a strict entry")
    return InteractionMatrix(A), float(t), float(gamma)


def constant_term(q: int, k: int, beta: float, gamma: float, t: float) -> float:
    """Constant term of the reduced characteristic cubic; negative for valid instances."""
    return (q - k) * (k + 1) * (beta - 1) - t * (beta - 1) * (beta + k) * (q - k - 1 + gamma)


def verify_prop_signature(q: int, d: int, beta: float, k: int, gamma: float = DEFAULT_GAMMA, tol: float = SIGN_TOL) -> dict:
    A, t, gamma = construct_signature_instance(q, d, beta, k, gamma)
    B = build_B(beta, A)
    sig = eigen_signature(B, tol)
    want = (k + 2, 0, q - k - 1)
    sums = column_power_sums(A, d)
    spread = float((sums.max() - sums.min()) / sums.max())
    c0 = constant_term(q, k, beta, gamma, t)
    checks = {
        "signature": sig.counts == want,
        "constant_term_negative": c0 < 0,
        "columns_tied": spread <= 1e-10,
    }
    return {
        "q": q,
        "d": d,
        "beta": beta,
        "k": k,
        "gamma": gamma,
        "t": t,
        "A": A.to_json(),
        "signature": sig.to_json(),
        "expected": list(want),
        "constant_term": c0,
        "column_sum_spread": spread,
        "checks": checks,
        "pass": all(checks.values()),
    }


def scan(q: int, d: int, beta: float, gamma: float = DEFAULT_GAMMA, tol: float = SIGN_TOL) -> dict:
    rows = [verify_prop_signature(q, d, beta, k, gamma, tol) for k in range(q)]
    return {"q": q, "d": d, "beta": beta, "instances": rows, "pass": all(r["pass"] for r in rows)}


def gram_witness(B) -> np.ndarray:
    """Quadratic form of ``B`` on ``span{e_0, 1 on the original spins}``."""
    B = as_matrix(B)
    u = np.zeros(B.q)
    u[0] = 1.0
    w = np.ones(B.q)
    w[0] = 0.0
    V = np.stack([u, w], axis=1)
    return V.T @ B.entries @ V


def check_two_positive(B, tol: float = SIGN_TOL) -> dict:
    """At least two positive eigenvalues, and a positive definite 2x2 Gram witness."""
    B = as_matrix(B)
    b = B.entries
    A = b[1:, 1:]
    if b[0, 0] < 1 or np.any(b[0, 1:] != 1) or np.any(b[1:, 0] != 1):
        raise ValidationError("matrix is not of the form B(beta, A) with beta >= 1", "B")
    if np.any(A < 1) or not np.any(A > 1):
        raise ValidationError("A must be >= 1 entrywise and differ from the all-ones matrix", "B")
    sig = eigen_signature(B, tol)
    gram = gram_witness(B)
    gram_pd = bool(gram[0, 0] > 0 and np.linalg.det(gram) > 0)
    return {
        "n_pos": sig.n_pos,
        "gram": gram.tolist(),
        "gram_positive_definite": gram_pd,
        "pass": sig.n_pos >= 2 and gram_pd,
    }
