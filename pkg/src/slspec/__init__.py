"""Forward and inverse spectral tools for u'' - q(x) u + lam u = 0 on (0, pi).

The boundary conditions are the irregular pair parametrized by ``b`` and
``theta``.  Hot loops run through numba when it is available; set
``SLSPEC_DISABLE_NUMBA=1`` to force the pure numpy path.  ``SLSPEC_THREADS``
caps worker threads.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, HAVE_NUMBA
from .errors import (
    ConvergenceError,
    FundamentalOverflowError,
    InvalidInputError,
    MiscountError,
    NotAdmissibleError,
    SingularSystemError,
    SpectralError,
    WindingError,
    ZeroOnBoundaryError,
)
from .fundamental import (
    FundamentalEndpoint,
    FundamentalPath,
    PotentialGrid,
    random_trig_potential,
    solve_fundamental,
    solve_fundamental_batch,
    solve_fundamental_path,
    wronskian_defect,
)
from .spectral import (
    BoundaryParams,
    Rect,
    SpectrumEntry,
    SpectrumList,
    TailReport,
    count_zeros,
    count_zeros_disk,
    determinant,
    find_eigenvalues,
    newton,
    tail_regularity,
)
from .models import (
    EntireModel,
    Example1,
    Example2,
    ExpressionModel,
    NodeProduct,
    OdeDeterminant,
    SineQuotient,
    SpectrumProduct,
    ZeroModel,
    example1_f,
    example2_u,
    model_from_descriptor,
    node_product_s,
    node_product_sdot,
    pw_structure_check,
    sine_quotient,
    spectrum_product_u,
    truncated_sine_product,
)
from .gl_inverse import (
    GLData,
    KernelGrid,
    assemble_F,
    build_gl_data,
    build_nodes,
    extract_potential,
    reconstruct,
    select_N,
    select_constants,
    solve_gl,
    verify_reconstruction,
)
