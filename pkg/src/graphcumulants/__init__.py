"""Subgraph moments, graph cumulants and two-sample tests for samples of graphs."""

from .atlas import Atlas, SmallGraph, canonical_form, get_atlas
from .counting import CountVector, StatVector, count_all, falling_factorial, inj_count_bruteforce
from .graph import (Graph, GraphSample, SbmSpec, assortative_sbm, erdos_renyi, heterogeneous_sbm,
                    load_edge_list, load_graph, match_edge_density, sample_sbm, subsample_nodes)
from .models import BlendSpec, blend_kronecker, sbm_moment, sbm_moment_jacobian
from .statistics import (CovMatrix, build_unbiased_map, cumulant_covariance, cumulants_to_moments,
                         estimate_cumulants, estimate_moments, moment_covariance,
                         moments_to_cumulants, sample_covariance)
from .twosample import TestReport, chi2_cdf, mahalanobis_sq, two_sample_test

__version__ = "0.1.0"

__all__ = [
    "Atlas", "SmallGraph", "canonical_form", "get_atlas", "CountVector", "StatVector",
    "count_all", "falling_factorial", "inj_count_bruteforce", "Graph", "GraphSample", "SbmSpec",
    "assortative_sbm", "erdos_renyi", "heterogeneous_sbm", "load_edge_list", "load_graph",
    "match_edge_density", "sample_sbm", "subsample_nodes", "BlendSpec", "blend_kronecker",
    "sbm_moment", "sbm_moment_jacobian", "CovMatrix", "build_unbiased_map",
    "cumulant_covariance", "cumulants_to_moments", "estimate_cumulants", "estimate_moments",
    "moment_covariance", "moments_to_cumulants", "sample_covariance", "TestReport", "chi2_cdf",
    "mahalanobis_sq", "two_sample_test",
]
