"""Two-layer acoustic waveguide: dispersion analysis and first-arriving-signal estimation."""

from .continuation import BranchPoint, ComplexRoot, continue_root, estimate_fas_mr, find_branch_points, sheet0prime
from .core import (
    KernelValues,
    Medium,
    SpectralPoint,
    WaveguideConfig,
    alpha,
    apply_limiting_absorption,
    eval_kernels,
    load_config,
    demo_config,
)
from .dispersion import Branch, DispersionRoot, GvPeak, find_gv_peaks, find_real_roots, group_velocity, trace_branches
from .errors import (
    AmbiguityError,
    BranchPointCollision,
    ConfigError,
    ConvergenceError,
    CutoffSingularityError,
    FasguideError,
    FasNotFound,
    ResolutionError,
)
from .estimate import FasEstimate
from .leaky import LeakyRoot, estimate_fas_leaky, solve_leaky
from .pseudobranch import TangentModel, build_model, estimate_a, estimate_beta, estimate_fas_pseudo, fit_linear
from .synthesis import (
    FasMeasurement,
    ProbePulse,
    TimeSeries,
    direct_inversion_field,
    extract_fas,
    fit_decay,
    modal_sum_field,
    pulse_spectrum,
    simulate,
)

__version__ = "0.1.0"
