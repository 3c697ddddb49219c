"""Seeded random streams and samplers for distributions.

Every stream is keyed by ``(seed, *keys)`` through a counter-based Philox
generator, so sample ``k`` of an experiment does not depend on how many
other samples were drawn or in what order.
"""
from __future__ import annotations

import numpy as np

from .core import JointDistribution, ProductMeasure


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))


def dirichlet_joint(rng: np.random.Generator, q: int, d: int, alpha: float = 1.0) -> JointDistribution:
    """Flat Dirichlet draw over all ``q**d`` configurations.

    Entries are floored at 1e-300 so the draw has full support.
    """
    w = rng.dirichlet(np.full(q**d, alpha))
    w = np.maximum(w, 1e-300)
    return JointDistribution.from_weights(q, d, w)


def dirichlet_product(rng: np.random.Generator, q: int, d: int, alpha: float = 1.0) -> ProductMeasure:
    m = rng.dirichlet(np.full(q, alpha), size=d)
    return ProductMeasure(m / m.sum(axis=1, keepdims=True))


def dirichlet_marginals(rng: np.random.Generator, n: int, d: int, q: int, alpha: float = 1.0) -> np.ndarray:
    """``n`` product measures as an ``(n, d, q)`` array."""
    m = rng.dirichlet(np.full(q, alpha), size=(n, d))
    return m / m.sum(axis=-1, keepdims=True)
