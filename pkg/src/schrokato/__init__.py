"""Desk-scale numerical laboratory for Schrodinger semigroups.

Model-space heat kernels, Kato/Dynkin potential functionals, lattice
covariant Schrodinger operators, Feynman-Kac Monte Carlo, and the
semigroup comparison inequalities connecting them.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    ModelSpace,
    Point,
    classify_completeness,
    distance,
    euclidean_radius,
    spectral_bottom,
    volume_ball,
)
from .kernels import (  # noqa: F401
    ControlPair,
    KernelHandle,
    calibrate_constant,
    check_control_pair,
    ck_residual,
    eval_kernel,
    green,
    kernel_mass,
    make_control_pair,
    make_kernel,
    make_matrix_kernel,
)
from .lattice import (  # noqa: F401
    BundleData,
    PotentialField,
    SchrodingerOperator,
    WeightedGraph,
    assemble_operator,
    attach_gauge,
    build_grid_graph,
    holonomy,
)
from .semigroup import (  # noqa: F401
    SemigroupEvaluator,
    apply_semigroup,
    resolvent_power,
    spectrum_bottom,
    trotter_apply,
)
from .stochastics import (  # noqa: F401
    MCEstimate,
    PathSample,
    fk_covariant,
    fk_scalar,
    sample_path_chart,
    sample_path_ctmc,
    survival_probability,
)
from .kato import (  # noqa: F401
    KatoReport,
    RadialPotential,
    classify_potential,
    dynkin_functional,
    form_bound_check,
    khasminskii_constants,
    resolvent_functional,
    weighted_lq_bound,
)
