"""Belief-propagation images of spin systems: exact recursion checks, image
geometry, nonconvexity witnesses, product-measure solvability and influence
matrices on small instances."""
from .bp import bp, bp_product, check_vertex_recursion, gibbs, marginalize, tilt, unnormalized_message
from .core import (
    CheckFailure,
    ExternalField,
    Graph,
    InfeasibleError,
    InteractionMatrix,
    JointDistribution,
    Pinning,
    ProductMeasure,
    ResourceLimitError,
    SpinImageError,
    ValidationError,
    hardcore,
    ising,
    potts,
    proper_colorings,
)
from .counterexample import NonconvexityWitness, build_B, certify_nonconvexity, verify_witness
from .estimators import BeliefPropagation, HullMembership, MixtureWeights, ProductMeasureSolver
from .image import hull_membership, mixture_weights, product_image_extremum, vertex_images
from .weitz import weitz_check, weitz_fields

__version__ = "0.1.0"

__all__ = [
    "BeliefPropagation",
    "CheckFailure",
    "ExternalField",
    "Graph",
    "HullMembership",
    "InfeasibleError",
    "InteractionMatrix",
    "JointDistribution",
    "MixtureWeights",
    "NonconvexityWitness",
    "Pinning",
    "ProductMeasure",
    "ProductMeasureSolver",
    "ResourceLimitError",
    "SpinImageError",
    "ValidationError",
    "bp",
    "bp_product",
    "build_B",
    "certify_nonconvexity",
    "check_vertex_recursion",
    "gibbs",
    "hardcore",
    "hull_membership",
    "ising",
    "marginalize",
    "mixture_weights",
    "potts",
    "product_image_extremum",
    "proper_colorings",
    "tilt",
    "unnormalized_message",
    "vertex_images",
    "verify_witness",
    "weitz_check",
    "weitz_fields",
]
