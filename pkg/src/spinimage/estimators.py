"""scikit-learn style wrappers.

Each row of ``X`` is one distribution: a flat weight vector over ``[q]^d``
for joint laws, or a flattened ``(d, q)`` array for product measures.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .antiferro import solve_product
from .bp import bp, bp_product_batch
from .core import JointDistribution, ValidationError, as_matrix
from .image import _simplex_fit, mixture_weights, vertex_images


class _MatrixEstimator(BaseEstimator):
    def _fit_matrix(self):
        self.matrix_ = as_matrix(self.A)
        self.q_ = self.matrix_.q
        return self

    def _joint_rows(self, X):
        check_is_fitted(self, "matrix_")
        X = check_array(X, dtype=float)
        q, d = self.q_, self.d
        if X.shape[1] != q**d:
            raise ValidationError(f"rows must have {q ** d} entries, got {X.shape[1]}", "X")
        return [JointDistribution(q, d, row) for row in X]


class BeliefPropagation(TransformerMixin, _MatrixEstimator):
    """Map neighborhood laws to BP marginals.

    With ``product=True`` rows are flattened ``(d, q)`` product measures.
    """

    def __init__(self, A=None, d=2, product=False):
        self.A = A
        self.d = d
        self.product = product

    def fit(self, X=None, y=None):
        return self._fit_matrix()

    def transform(self, X):
        if self.product:
            check_is_fitted(self, "matrix_")
            X = check_array(X, dtype=float)
            if X.shape[1] != self.d * self.q_:
                raise ValidationError(f"rows must have {self.d * self.q_} entries, got {X.shape[1]}", "X")
            return bp_product_batch(self.matrix_, X.reshape(-1, self.d, self.q_))
        return np.array([bp(self.matrix_, mu) for mu in self._joint_rows(X)])


class MixtureWeights(TransformerMixin, _MatrixEstimator):
    """Weights over configurations that express ``F(mu)`` through the vertex images."""

    def __init__(self, A=None, d=2):
        self.A = A
        self.d = d

    def fit(self, X=None, y=None):
        return self._fit_matrix()

    def transform(self, X):
        return np.array([mixture_weights(self.matrix_, mu) for mu in self._joint_rows(X)])


class ProductMeasureSolver(TransformerMixin, _MatrixEstimator):
    """Single-site law of the i.i.d. product with the same BP image; NaN rows where none exists."""

    def __init__(self, A=None, d=2):
        self.A = A
        self.d = d

    def fit(self, X=None, y=None):
        return self._fit_matrix()

    def transform(self, X):
        rows = self._joint_rows(X)
        out = np.full((len(rows), self.q_), np.nan)
        for i, mu in enumerate(rows):
            sol = solve_product(self.matrix_, mu)
            if sol.found:
                out[i] = sol.nu.marginals[0]
        return out


class HullMembership(ClassifierMixin, _MatrixEstimator):
    """Classify points of the simplex as inside or outside the hull of vertex images."""

    def __init__(self, A=None, d=2, tol=1e-9):
        self.A = A
        self.d = d
        self.tol = tol

    def fit(self, X=None, y=None):
        self._fit_matrix()
        self.vertices_ = vertex_images(self.matrix_, self.d).images
        self.classes_ = np.array([False, True])
        return self

    def decision_function(self, X):
        """Negative sup-norm distance to the hull (0 for members, up to ``tol``)."""
        check_is_fitted(self, "vertices_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.q_:
            raise ValidationError(f"points must have {self.q_} entries, got {X.shape[1]}", "X")
        return np.array([-_simplex_fit(self.vertices_, p)[1] for p in X])

    def predict(self, X):
        return self.decision_function(X) >= -self.tol
