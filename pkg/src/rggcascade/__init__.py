"""Continuous-state cascading node failure on random geometric graphs."""

from .analysis import (
    AnalysisReport,
    analyze,
    check_theorem1,
    critical_mu,
    example1_rho,
    example1_sigma_bracket,
    hr_probability,
    hv_probability,
    rho_k,
    sigma_k,
    solve_m_prime,
    theorem2_lhs,
)
from .cascade import (
    CascadeResult,
    NodeClass,
    NodeEnsemble,
    SeedPolicy,
    assign_attributes,
    classify,
    pick_seed,
    run_cascade,
)
from .distributions import DistributionSpec, QuadratureError, QuadratureRequest, integrate
from .percolation import ComponentReport, components, gc_present
from .rgg import PointProcessSpec, RegionSpec, SpatialGraph, build_graph, normalize_scale, sample_points

__version__ = "0.1.0"
