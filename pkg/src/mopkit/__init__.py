"""Multiple orthogonal polynomials, recurrence matrices and kernel asymptotics."""

from .errors import (
    BoundsError,
    ConstructionError,
    MopkitError,
    NotNormalIndexError,
    PrecisionFailure,
    SupportDomainError,
    ValidationError,
)
from .scalars import EXACT, FLOAT, default_precision
from .measures import (
    Interval,
    MeasureSystem,
    WeightComponent,
    angelesco_system,
    cauchy_transform,
    from_config,
    integrate,
    integrate_component,
    jacobi_pineiro_system,
    lebesgue,
    lebesgue_with_atoms_system,
    legendre_system,
    moment,
    nikishin_system,
)
from .paths import Path, direction_path, stepline, validate
from .mop import (
    BiorthogonalFamily,
    QFunction,
    TypeIIPoly,
    TypeIVector,
    biorthogonality_matrix,
    perfectness_scan,
    type1,
    type2,
)
from .hessenberg import (
    HessenbergMatrix,
    NNRRCoeffs,
    build_J,
    build_J_from_nnrr,
    charpoly,
    ndb_profile,
    nnrr,
    power_window,
    truncate,
)
from .kernel import (
    CDKernel,
    atom_limit_experiment,
    detpos_check,
    kernel_eval,
    nevai_G,
    nevai_G_quadrature,
    nevai_abs_ratio,
    nevai_hypothesis_c,
    nevai_product_sign_scan,
    positivity_scan,
    reproducing_check,
)
from .asymptotics import (
    MomentGapTable,
    RootList,
    eta_moment,
    interlacing_check,
    moment_gap_experiment,
    nu_moment,
    nu_moment_from_roots,
    real_roots,
    tv_bound,
    weak_limit_compare,
)
from .equilibrium import (
    DiscretizedMeasure,
    EquilibriumResult,
    InteractionSpec,
    limit_measure,
    log_kernel_matrix,
    minimize,
    mutual_energy,
)

__version__ = "0.1.0"
