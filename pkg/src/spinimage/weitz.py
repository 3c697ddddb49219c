"""Universal external fields for two-spin systems.

For ``q = 2`` the BP marginal of any joint neighborhood law equals the BP
marginal of a product of tilted single-site marginals, with tilts that do not
depend on the law. The tilt for site ``i`` pins the prefix ``j < i`` to spin 0
and the suffix ``j > i`` to spin 1, expressed as fields.
"""
from __future__ import annotations

import numpy as np

from .bp import bp, bp_product, marginalize, tilt
from .core import (
    ExternalField,
    InfeasibleError,
    ProductMeasure,
    ValidationError,
    as_joint,
    as_matrix,
)

DEFAULT_TOL = 1e-10


def weitz_fields(A, d: int) -> list[ExternalField]:
    """The ``d`` universal fields for a two-spin matrix ``A``."""
    A = as_matrix(A)
    if A.q != 2:
        raise ValidationError("Weitz construction requires two spins", "q")
    if d < 1:
        raise ValidationError("d must be positive", "d")
    a = A.entries
    out = []
    for i in range(d):
        w = np.empty((d, 2))
        w[:i] = a[0]
        w[i] = 1.0
        w[i + 1 :] = a[1]
        out.append(ExternalField(w))
    return out


def weitz_marginals(A, mu) -> ProductMeasure:
    """Tilted single-site marginals ``(lambda^(i) * mu)_i`` for ``i = 0..d-1``.

    Raises :class:`InfeasibleError` naming the first site whose tilt has zero
    total mass.
    """
    mu = as_joint(mu)
    fields = weitz_fields(A, mu.d)
    rows = []
    for i, f in enumerate(fields):
        try:
            tilted = tilt(f, mu)
        except InfeasibleError:
            raise InfeasibleError(f"degenerate support: zero telescoping denominator at prefix index {i}") from None
        rows.append(marginalize(tilted, [i]).weights)
    return ProductMeasure(np.vstack(rows))


def weitz_check(A, mu) -> float:
    """Sup-norm gap between ``F(mu)`` and ``F`` of the tilted product.

    The identity is exact, so the residual is pure rounding; compare it
    against a tolerance with :func:`weitz_report`.
    """
    A = as_matrix(A)
    mu = as_joint(mu)
    if A.q != 2:
        raise ValidationError("Weitz construction requires two spins", "q")
    nu = weitz_marginals(A, mu)
    return float(np.max(np.abs(bp(A, mu) - bp_product(A, nu))))


def weitz_report(A, mu, tol: float = DEFAULT_TOL) -> dict:
    r = weitz_check(A, mu)
    return {"residual": r, "tol": tol, "pass": bool(r <= tol)}

