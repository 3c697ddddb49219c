import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinimage.bp import (
    bp,
    bp_product,
    check_vertex_recursion,
    connected_graphs,
    gibbs,
    marginalize,
    neighborhood_marginal,
    tilt,
    unnormalized_message,
)
from spinimage.core import (
    ExternalField,
    Graph,
    InfeasibleError,
    JointDistribution,
    ProductMeasure,
    ResourceLimitError,
    ValidationError,
    hardcore,
    potts,
    product_to_joint,
    proper_colorings,
)
from spinimage.counterexample import build_B
from spinimage.sampling import dirichlet_joint, dirichlet_product, stream

from . import oracles


def test_message_all_ones_constant():
    mu = dirichlet_joint(stream(0), 3, 3)
    assert np.allclose(unnormalized_message(np.ones((3, 3)), mu), 1.0, atol=1e-15)


def test_message_point_mass_ferro():
    mu = JointDistribution.point_mass((0, 0), 3)
    assert unnormalized_message(potts(3, 2), mu).tolist() == [4.0, 1.0, 1.0]


def test_message_uniform_symmetric():
    G = unnormalized_message(potts(3, 2), JointDistribution.uniform(3, 2))
    assert np.ptp(G) <= 1e-15


def test_bp_on_B_point_mass_matches_exact_oracle():
    B = build_B(2, potts(3, 2))
    got = bp(B, JointDistribution.point_mass((1, 1), 4))
    w = [Fraction(0)] * 16
    w[oracles.index((1, 1), 4)] = Fraction(1)
    exact = oracles.bp(oracles.frac_matrix(B.entries.tolist()), w, 4, 2)
    assert exact == [Fraction(1, 7), Fraction(4, 7), Fraction(1, 7), Fraction(1, 7)]
    assert np.max(np.abs(got - np.array(exact, dtype=float))) <= 1e-15


def test_bp_matches_naive_oracle_random():
    for k in range(20):
        rng = stream(11, k)
        q, d = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        A = rng.uniform(0, 3, (q, q))
        A = (A + A.T) / 2
        mu = dirichlet_joint(rng, q, d)
        want = oracles.bp(A.tolist(), mu.weights.tolist(), q, d)
        assert np.max(np.abs(bp(A, mu) - want)) <= 1e-14


def test_bp_all_ones_uniform():
    mu = dirichlet_joint(stream(1), 4, 2)
    assert np.max(np.abs(bp(np.ones((4, 4)), mu) - 0.25)) == 0.0


def test_bp_infeasible_input():
    with pytest.raises(InfeasibleError, match="infeasible input"):
        bp(proper_colorings(2), JointDistribution.point_mass((0, 1), 2))


def test_bp_dimension_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        bp(potts(3, 2), JointDistribution.uniform(2, 2))


def test_bp_product_hardcore_example():
    p = 0.3
    out = bp_product(hardcore(), ProductMeasure([[p, 1 - p]]))
    assert np.max(np.abs(out - np.array([1 - p, 1]) / (2 - p))) <= 1e-15


def test_bp_product_point_mass_and_all_ones():
    A = potts(3, 0.5)
    assert np.array_equal(bp_product(A, ProductMeasure.point_mass((2, 0), 3)), bp(A, JointDistribution.point_mass((2, 0), 3)))
    assert np.max(np.abs(bp_product(np.ones((3, 3)), dirichlet_product(stream(2), 3, 4)) - 1 / 3)) == 0.0


def test_bp_product_agrees_with_joint():
    worst = 0.0
    for k in range(1000):
        rng = stream(3, k)
        q, d = int(rng.integers(2, 6)), int(rng.integers(1, 6))
        A = rng.uniform(0, 2, (q, q))
        A = (A + A.T) / 2
        nu = dirichlet_product(rng, q, d)
        worst = max(worst, np.max(np.abs(bp_product(A, nu) - bp(A, product_to_joint(nu)))))
    assert worst <= 1e-12


def test_bp_color_permutation_equivariance():
    A = potts(3, 0.4)
    for perm in itertools.permutations(range(3)):
        mu = dirichlet_joint(stream(4), 3, 3)
        pw = np.zeros_like(mu.weights)
        for tau in oracles.configs(3, 3):
            pw[oracles.index(tuple(perm[t] for t in tau), 3)] = mu.weights[oracles.index(tau, 3)]
        got = bp(A, JointDistribution(3, 3, pw))
        want = np.empty(3)
        want[list(perm)] = bp(A, mu)
        assert np.max(np.abs(got - want)) <= 1e-12


def test_tilt_examples():
    mu = JointDistribution(2, 1, [0.5, 0.5])
    assert np.allclose(tilt(ExternalField([[2, 1]]), mu).weights, [2 / 3, 1 / 3], atol=1e-15)
    nu = dirichlet_joint(stream(5), 2, 3)
    assert np.max(np.abs(tilt(ExternalField.ones(3, 2), nu).weights - nu.weights)) <= 1e-15
    sel = tilt(ExternalField([[1, 0], [0, 1]]), JointDistribution.uniform(2, 2))
    assert sel == JointDistribution.point_mass((0, 1), 2)


def test_tilt_annihilates():
    with pytest.raises(InfeasibleError, match="annihilates"):
        tilt(ExternalField([[0, 1]]), JointDistribution(2, 1, [1.0, 0.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_tilt_composition(seed):
    rng = stream(seed)
    mu = dirichlet_joint(rng, 3, 2)
    f = ExternalField(rng.uniform(0.1, 2, (2, 3)))
    g = ExternalField(rng.uniform(0.1, 2, (2, 3)))
    both = ExternalField(f.weights * g.weights)
    assert np.max(np.abs(tilt(f, tilt(g, mu)).weights - tilt(both, mu).weights)) <= 1e-12


def test_marginalize_examples():
    mu = JointDistribution(2, 2, [0.1, 0.2, 0.3, 0.4])
    assert np.allclose(marginalize(mu, [0]).weights, [0.4, 0.6], atol=1e-15)
    assert np.allclose(marginalize(mu, [1]).weights, [0.3, 0.7], atol=1e-15)
    assert marginalize(mu, [0, 1]) == mu
    swapped = marginalize(mu, [1, 0]).weights
    assert np.allclose(swapped, [0.1, 0.3, 0.2, 0.4], atol=1e-15)
    with pytest.raises(ValidationError, match="empty"):
        marginalize(mu, [])


def test_marginalize_product():
    nu = dirichlet_product(stream(6), 3, 4)
    m = marginalize(product_to_joint(nu), [3, 1])
    want = product_to_joint(ProductMeasure(nu.marginals[[3, 1]]))
    assert np.max(np.abs(m.weights - want.weights)) <= 1e-15


def test_gibbs_examples():
    res = gibbs(Graph(3), potts(3, 2))
    assert res.Z == 27 and np.allclose(res.distribution.weights, 1 / 27)
    k2 = gibbs(Graph(2, [(0, 1)]), proper_colorings(2))
    assert k2.Z == 2
    assert k2.distribution.weights.tolist() == [0.0, 0.5, 0.5, 0.0]
    tri = gibbs(Graph(3, [(0, 1), (1, 2), (0, 2)]), proper_colorings(3))
    assert tri.Z == 6


def test_gibbs_matches_naive_oracle_with_fields():
    g = Graph(4, [(0, 1), (1, 2), (2, 3), (0, 2)])
    rng = stream(7)
    A = rng.uniform(0.2, 2, (3, 3))
    A = (A + A.T) / 2
    fields = rng.uniform(0.1, 2, (4, 3))
    w, Z = oracles.gibbs(4, g.edges, A.tolist(), 3, fields.tolist())
    res = gibbs(g, A, fields)
    assert abs(res.Z - Z) <= 1e-12 * Z
    assert np.max(np.abs(res.distribution.weights - w)) <= 1e-15


def test_gibbs_errors():
    with pytest.raises(ResourceLimitError):
        gibbs(Graph(20), potts(3, 2), budget=3**10)
    with pytest.raises(InfeasibleError, match="no feasible"):
        gibbs(Graph(3, [(0, 1), (1, 2), (0, 2)]), proper_colorings(2))


def test_recursion_star_center_product():
    star = Graph(5, [(0, i) for i in range(1, 5)])
    A = potts(3, 0.6)
    assert check_vertex_recursion(star, A, 0) <= 1e-12
    nb = neighborhood_marginal(star, A, 0)
    assert np.max(np.abs(nb.weights - 1 / 81)) <= 1e-15


def test_recursion_triangle_colorings():
    tri = Graph(3, [(0, 1), (1, 2), (0, 2)])
    for v in range(3):
        assert check_vertex_recursion(tri, proper_colorings(3), v) <= 1e-12


def test_recursion_field_on_root():
    g = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    A = potts(2, 0.3)
    fields = stream(8).uniform(0.2, 3, (4, 2))
    for v in range(4):
        assert check_vertex_recursion(g, A, v, fields) <= 1e-12


def test_recursion_isolated_vertex_rejected():
    with pytest.raises(ValidationError, match="degree 0"):
        check_vertex_recursion(Graph(2), potts(2, 2), 0)


def test_graph_corpus_size():
    assert len(connected_graphs(6)) == 142
