"""1D finite element laboratory for singularly perturbed weak-layer problems."""

from .problems import (
    EPS_MAX,
    DELTA_DEFAULT,
    CatalogError,
    ProblemError,
    LayerTerm,
    Problem,
    catalog_ids,
    make_problem,
    exact_eval,
    manufacture_rhs,
    validate,
    RECOMMENDED,
)
from .meshes import (
    Mesh,
    MeshError,
    make_mesh,
    uniform_mesh,
    two_region_mesh,
    shishkin_mesh,
    graded_tail_mesh,
)
from .quadrature import gauss_rule, adaptive_integral, layer_seeds
from .spaces import (
    FESpace,
    LagrangeSpace,
    HermiteSpace,
    DiscreteFunction,
    SpaceError,
    make_space,
)
from .banded import BandedMatrix, SingularSystemError
from .assembly import (
    AssemblyError,
    LinearSystem,
    DiscreteSolution,
    assemble,
    assemble_order2,
    assemble_order4,
    assemble_mixed,
    build_spaces,
    solve_problem,
)
from .interpolation import nodal_interpolant, moment_interpolant, l2_project, interpolate
from .norms import (
    NORM_PRESETS,
    NormSpec,
    get_norm_spec,
    seminorm_error,
    seminorm,
    weighted_norm,
    norm_error,
    solver_noise,
)
from .study import (
    CaseConfig,
    CaseResult,
    CaseError,
    SweepTable,
    run_case,
    run_sweep,
    eoc,
    uniformity,
    smallness_check,
    render,
    DEFAULT_EPS_GRID,
    DEFAULT_H_GRID,
)

__version__ = "0.1.0"
