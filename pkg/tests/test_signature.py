import itertools

import numpy as np
import pytest

from spinimage.core import CheckFailure, ValidationError, potts
from spinimage.counterexample import build_B, column_power_sums
from spinimage.signature import (
    check_two_positive,
    construct_signature_instance,
    eigen_signature,
    gram_witness,
    scan,
    verify_prop_signature,
)

GRID = [
    (q, d, beta, k)
    for q, d, beta in itertools.product([3, 4, 5], [2, 3], [1.5, 2.0, 4.0])
    for k in range(q)
]


def test_instance_formula():
    A, t, gamma = construct_signature_instance(3, 2, 2.0, 1, 0.99)
    assert gamma == 0.99
    assert t == pytest.approx(((4 + 1) / (0.9801 + 1)) ** 0.5, rel=1e-15)
    a = A.entries
    assert a[0, 0] == 2 and a[0, 1] == a[0, 2] == 1
    assert a[1, 1] == pytest.approx(t * 0.99) and a[1, 2] == pytest.approx(t)


def test_last_block_closed_form():
    A, t, gamma = construct_signature_instance(4, 3, 1.5, 3, 0.999)
    assert t == pytest.approx(1.5 / 0.999, rel=1e-14)
    assert A.entries[3, 3] == pytest.approx(1.5, rel=1e-14)


@pytest.mark.parametrize("q, d, beta, k", GRID[:12])
def test_columns_tied(q, d, beta, k):
    A, _, _ = construct_signature_instance(q, d, beta, k)
    s = column_power_sums(A, d)
    assert np.ptp(s) <= 1e-12 * s.max()
    assert np.all(A.entries >= 1)


def test_gamma_push_and_failure():
    # t * gamma <= 1 at gamma = 0.5 for these parameters, so gamma moves toward 1
    _, t, gamma = construct_signature_instance(3, 2, 1.01, 0, 0.5)
    assert gamma > 0.5 and t * gamma > 1
    with pytest.raises(ValidationError):
        construct_signature_instance(3, 2, 1.0, 0)
    with pytest.raises(ValidationError):
        construct_signature_instance(3, 2, 2.0, 3)


def test_gamma_push_exhausted(monkeypatch):
    import spinimage.signature as sig

    monkeypatch.setattr(sig, "MAX_GAMMA_PUSH", 0)
    with pytest.raises(CheckFailure, match="gamma too small"):
        sig.construct_signature_instance(3, 2, 1.01, 0, 0.5)


def test_eigen_signature_examples():
    assert eigen_signature(np.eye(3)).counts == (3, 0, 0)
    assert eigen_signature(np.ones((3, 3))).counts == (1, 2, 0)
    assert eigen_signature(build_B(2, potts(3, 2))).n_pos >= 2
    with pytest.raises(ValidationError, match="symmetric"):
        eigen_signature(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "q, d, beta, k, expected",
    [(3, 2, 2.0, 1, (3, 0, 1)), (3, 2, 2.0, 2, (4, 0, 0)), (4, 3, 1.5, 0, (2, 0, 3))],
)
def test_prop_signature_examples(q, d, beta, k, expected):
    rep = verify_prop_signature(q, d, beta, k, 0.999)
    assert tuple(rep["signature"][x] for x in ("n_pos", "n_zero", "n_neg")) == expected
    assert rep["pass"]


def test_full_grid_and_tolerance_stability():
    for q, d, beta, k in GRID:
        reps = [verify_prop_signature(q, d, beta, k, tol=tol) for tol in (1e-10, 1e-8, 1e-6)]
        assert all(r["pass"] for r in reps)
        lam = np.abs(reps[0]["signature"]["eigenvalues"])
        assert lam.min() / lam.max() >= 100 * 1e-6


def test_scan_all_k():
    rep = scan(4, 2, 2.0)
    assert rep["pass"] and [r["k"] for r in rep["instances"]] == [0, 1, 2, 3]


def test_two_positive():
    rep = check_two_positive(build_B(2, potts(3, 2)))
    assert rep["pass"] and rep["gram"] == [[2.0, 3.0], [3.0, 12.0]]
    for q, d, beta, k in GRID:
        A, _, _ = construct_signature_instance(q, d, beta, k)
        B = build_B(beta, A)
        r = check_two_positive(B)
        assert r["pass"]
        assert r["gram_positive_definite"] == (eigen_signature(B).n_pos >= 2)


def test_two_positive_precondition():
    with pytest.raises(ValidationError):
        check_two_positive(build_B(1, np.ones((3, 3))))


def test_gram_witness_is_quadratic_form():
    B = build_B(3.0, potts(3, 2)).entries
    G = gram_witness(B)
    u = np.array([1.0, 0, 0, 0])
    w = np.array([0.0, 1, 1, 1])
    assert G[0, 0] == u @ B @ u and G[1, 1] == w @ B @ w and G[0, 1] == u @ B @ w
