"""Decentralized continuous greedy for monotone submodular maximization."""

from .baselines import brute_force_optimum, centralized_continuous_greedy, centralized_greedy
from .data import generate_synthetic, load_ratings
from .engine import RunParameters, Trajectory, run_continuous_dcg, run_discrete_dcg, snapshot_metrics
from .metrics import TheoryBounds, check_lemma_bounds, theory_constants
from .multilinear import (exact_gradient, exact_multilinear, facility_closed_form,
                          stochastic_gradient)
from .polytope import Box, PartitionMatroid, UniformMatroid
from .rounding import pipage_round, randomized_round
from .setfn import (FacilityLocation, RatingsMatrix, check_monotone_submodular,
                    facility_location, partition_users)
from .topology import CommGraph, build_graph, metropolis_weights, spectral_beta, validate_weights

__version__ = "0.1.0"
