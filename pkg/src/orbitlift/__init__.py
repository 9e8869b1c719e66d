"""Continuous lifts of curves of invariants and their Sobolev regularity.

The package lifts sampled curves (and two-dimensional fields) of
invariant-theory data back to the underlying representation: continuous
d-th roots of cyclic invariants, continuous root systems of monic
polynomial coefficients, orbit-space curves of unordered tuples, and
Noether-map invariants of finite matrix groups.  On top of the lifts it
measures derivative norms, locates the critical integrability exponent
empirically, and runs the local machinery (radical selections,
admissible windows, prepared-interval covers) that drives the regularity
bounds.
"""

from .analysis import (
    InterpolationReport,
    MainBoundReport,
    NormReport,
    QpReport,
    ScanProblem,
    check_interpolation_inequality,
    check_qp_inequality,
    critical_exponent_scan,
    derivative_samples,
    holder_norm,
    lp_derivative_norm,
    verify_main_bound,
    weak_lp_quasinorm,
)
from .core import (
    AQPoint,
    Grid,
    RepresentationSpec,
    SampledCurve,
    SampledGrid2D,
    finite_difference,
    make_sampled_curve,
    polarization_index,
    read_curve_csv,
    read_grid2d_csv,
    read_tuple_csv,
    refine,
    write_curve_csv,
    write_grid2d_csv,
    write_tuple_csv,
)
from .covers import CoverResult, PreparedInterval, build_prepared_interval, phi, select_cover
from .errors import (
    AllZeroAtPoint,
    ClustersNotSeparated,
    CoverPropertyViolation,
    CsvFormatError,
    DiscontinuousAtZeroSet,
    DominantVanishes,
    ExponentOutOfRange,
    LengthMismatch,
    NoReconcilingElement,
    NonMonotoneGrid,
    NotAGroup,
    OrbitLiftError,
    OrderTooHigh,
    OutOfRange,
    RaggedComponents,
    RefinementBudgetExhausted,
    RootSolveFailure,
    ShapeMismatch,
    VanishingDominant,
)
from .invariants import (
    InvariantValue,
    apply_group_element,
    elementary_symmetric,
    evaluate_sigma,
    group_elements,
    noether_invariants,
    polarized_invariants,
    power_map,
)
from .lifting import (
    GridLift,
    LiftedCurve,
    MonodromyReport,
    aq_distance,
    continuous_radical,
    continuous_roots,
    extend_through_zeros,
    glue_lifts,
    lift_grid_2d,
    lift_tuple_curve,
    read_lift_csv,
    solve_monic_roots,
    write_lift_csv,
)
from .reduction import (
    AdmissibilityReport,
    AdmissibleData,
    ClusterSplit,
    RadicalSelection,
    check_admissible,
    check_derivative_bounds,
    dominant_index,
    maximal_admissible_interval,
    normalized_curve,
    radical_selections,
    slice_selection,
    split_clusters,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
