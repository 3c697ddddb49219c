"""Naive reference implementations used to freeze expected values.

These share no code with the package: plain loops over ``itertools.product``
with exact ``Fraction`` arithmetic where the inputs allow it.
"""
from __future__ import annotations

import itertools
from fractions import Fraction


def configs(q, d):
    """Configurations in mixed-radix order, site 0 least significant."""
    for rev in itertools.product(range(q), repeat=d):
        yield tuple(reversed(rev))


def index(tau, q):
    return sum(c * q**i for i, c in enumerate(tau))


def message(A, weights, q, d):
    G = [0] * q
    for tau in configs(q, d):
        w = weights[index(tau, q)]
        if w == 0:
            continue
        for c in range(q):
            p = 1
            for t in tau:
                p *= A[c][t]
            G[c] += w * p
    return G


def bp(A, weights, q, d):
    G = message(A, weights, q, d)
    s = sum(G)
    return [g / s for g in G]


def gibbs(n, edges, A, q, fields=None):
    """Return (weights over [q]^n in mixed-radix order, Z)."""
    w = [0] * q**n
    for sigma in configs(q, n):
        p = 1
        for u, v in edges:
            p *= A[sigma[u]][sigma[v]]
        if fields is not None:
            for v in range(n):
                p *= fields[v][sigma[v]]
        w[index(sigma, q)] = p
    Z = sum(w)
    return [x / Z for x in w], Z


def conditional_marginal(weights, q, n, v, pins):
    out = [0] * q
    for sigma in configs(q, n):
        if all(sigma[u] == c for u, c in pins.items()):
            out[sigma[v]] += weights[index(sigma, q)]
    s = sum(out)
    return [x / s for x in out]


def frac_matrix(rows):
    return [[Fraction(x) for x in r] for r in rows]
