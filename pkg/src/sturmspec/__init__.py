"""Spectral numerics for one-dimensional Sturmian Schrodinger operators."""

__version__ = "0.1.0"

from .cf import RotationNumber, convergents, from_periodic, from_rational, is_bounded_density
from .errors import (
    DegeneracyError,
    ExponentFitError,
    InternalConsistencyError,
    NumericRangeError,
    PrecisionError,
    ResourceLimitError,
    SturmspecError,
)
from .gordon import (
    SquareWitness,
    d_lambda,
    find_square,
    half_word_trace,
    local_growth_report,
    reproduction_residual,
)
from .subordinacy import (
    ExponentFit,
    HolderReport,
    MValue,
    fit_exponents,
    free_m,
    holder_check,
    m_half_line,
    m_whole_line,
    mobius_sup,
    weyl_point,
)
from .traces import (
    CLambdaEstimate,
    TraceOrbit,
    approximate_spectrum,
    band_measure,
    estimate_C_lambda,
    fricke_vogt_residual,
    trace_orbit,
)
from .transfer import (
    MarkState,
    SolutionTrajectory,
    evolve,
    norm_U,
    norm_u,
    norms_at_mark,
    prefix_marks,
    step_matrix,
    word_matrix,
)
from .words import (
    NPartition,
    OrbitPhase,
    Word,
    canonical_word,
    is_conjugate,
    n_partition,
    potential_window,
    reverse,
    validate_partition,
    verify_concat_identity,
)
