"""Numerics for universal orthogonal quantum groups: fusion-ring random
walks, a corepresentation-category engine and boundary diagnostics."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BudgetExceeded,
    CategoryTooSmall,
    DivisionByZero,
    KacBoundary,
    NotGenerating,
    NotInFusion,
    NotInvolutive,
    NotTransient,
    NumericalError,
    OutOfRange,
    QwbError,
    Singular,
    TruncationTooSmall,
    ValidationError,
)
from .fmatrix import (  # noqa: F401
    ClassInvariant,
    FMatrix,
    FParams,
    canonical_invariants,
    standard_f,
    validate_f,
)
from .fusion import (  # noqa: F401
    Measure,
    classical_dim,
    convolution_power,
    convolve,
    fusion_mult,
    fusion_range,
    measure_props,
    qdim,
)
from .tlcat import (  # noqa: F401
    CategoryData,
    Isometry,
    XiVector,
    build_category,
    cg_isometry,
    xi_vector,
    zero_weight_space,
)
from .walk import (  # noqa: F401
    GreenTable,
    Kernel,
    green_central,
    green_row,
    martin_kernel_central,
    n_step,
    transience_report,
    transition_matrix,
)
