import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from spinimage.bp import bp, bp_product
from spinimage.core import JointDistribution, ValidationError, potts
from spinimage.estimators import BeliefPropagation, HullMembership, MixtureWeights, ProductMeasureSolver
from spinimage.sampling import dirichlet_joint, dirichlet_product, stream


def _joint_rows(q, d, n, seed=0):
    return np.array([dirichlet_joint(stream(seed, k), q, d).weights for k in range(n)])


def test_params_and_clone():
    est = BeliefPropagation(A=potts(3, 2), d=3)
    assert est.get_params() == {"A": est.A, "d": 3, "product": False}
    c = clone(est).set_params(d=2)
    assert c.d == 2 and est.d == 3
    assert HullMembership(tol=1e-6).get_params()["tol"] == 1e-6


def test_not_fitted():
    with pytest.raises(NotFittedError):
        BeliefPropagation(A=potts(3, 2)).transform(_joint_rows(3, 2, 1))
    with pytest.raises(NotFittedError):
        HullMembership(A=potts(3, 2)).predict([[1 / 3] * 3])


def test_transform_matches_bp():
    A = potts(3, 0.5)
    X = _joint_rows(3, 2, 10)
    out = BeliefPropagation(A=A, d=2).fit().transform(X)
    for row, x in zip(out, X):
        assert np.max(np.abs(row - bp(A, JointDistribution(3, 2, x)))) <= 1e-15


def test_product_rows():
    A = potts(3, 0.5)
    nus = [dirichlet_product(stream(1, k), 3, 4) for k in range(5)]
    X = np.array([nu.marginals.ravel() for nu in nus])
    out = BeliefPropagation(A=A, d=4, product=True).fit_transform(X)
    for row, nu in zip(out, nus):
        assert np.max(np.abs(row - bp_product(A, nu))) <= 1e-15


def test_mixture_weights_transform():
    X = _joint_rows(3, 2, 3)
    W = MixtureWeights(A=np.ones((3, 3)), d=2).fit().transform(X)
    assert np.max(np.abs(W - X)) <= 1e-15


def test_product_solver_nan_rows():
    A = potts(3, 0.5)
    X = np.vstack([JointDistribution.uniform(3, 4).weights, JointDistribution.point_mass((0, 0, 1, 1), 3).weights])
    out = ProductMeasureSolver(A=A, d=4).fit().transform(X)
    assert np.allclose(out[0], 1 / 3) and np.all(np.isnan(out[1]))


def test_hull_classifier():
    A = potts(3, 2)
    clf = HullMembership(A=A, d=2).fit()
    inside = BeliefPropagation(A=A, d=2).fit().transform(_joint_rows(3, 2, 5))
    X = np.vstack([inside, [[1.0, 0.0, 0.0]]])
    assert clf.predict(X).tolist() == [True] * 5 + [False]
    assert clf.decision_function(X)[-1] < -0.1
    assert list(clf.classes_) == [False, True]


def test_pipeline():
    A = potts(3, 2)
    pipe = make_pipeline(BeliefPropagation(A=A, d=2), HullMembership(A=A, d=2))
    pipe.fit(_joint_rows(3, 2, 2))
    assert pipe.predict(_joint_rows(3, 2, 4, seed=1)).all()


def test_width_errors():
    est = BeliefPropagation(A=potts(3, 2), d=2).fit()
    with pytest.raises(ValidationError, match="9 entries"):
        est.transform(np.ones((1, 8)) / 8)
    with pytest.raises(ValidationError, match="6 entries"):
        BeliefPropagation(A=potts(3, 2), d=2, product=True).fit().transform(np.ones((1, 5)))
    with pytest.raises(ValidationError, match="3 entries"):
        HullMembership(A=potts(3, 2), d=2).fit().predict([[0.5, 0.5]])
