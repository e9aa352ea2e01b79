"""Weyl functions of boundary triples, spectral enclosures and secular-equation eigenvalue search."""

__version__ = "0.1.0"

from .core import (
    BoundaryOperator,
    SectorSpec,
    WeylSample,
    analyze_boundary_operator,
    kappa_eta,
    mbdd_bound,
    psd_sqrt,
    ray_sector_bound,
    spectral_norm,
    sqrt_upper,
)
from .models import (
    Edge,
    MetricGraph,
    PointLattice,
    ScalarProfile,
    graph_weyl,
    graph_weyl_inverse,
    j0_sector_constant,
    kac_weyl_eval,
    lattice_gamma_apply,
    lattice_weyl,
    scalar_profile_norm,
    schur_bound_line,
    star_graph,
)
from .enclosures import (
    DecayEstimate,
    delta_log_regions,
    dist_enclosure,
    fit_decay,
    left_resolvent_free,
    parabola_enclosure,
    sector_enclosure,
    sector_sweep_bound,
    sample_model_decay,
    closed_form_decay,
    default_xi,
)
from .solver import (
    SecularFunction,
    SpectrumReport,
    find_eigenvalues,
    krein_resolvent_kernel,
    secular_eval,
    verify_containment,
    winding_count,
)
