"""dosepick: design optimization and conduct tooling for two-arm randomized
dose-optimization trials.

The package finds minimum sample sizes and decision boundaries (normal
approximation and exact binomial), evaluates operating characteristics
exactly and by simulation, and applies the resulting decision rules to
accumulating trial data.
"""

from .errors import (
    DomainError,
    DosepickError,
    InfeasibleDesignError,
    InsufficientDataError,
    NotApplicableError,
    ValidationError,
    VersionConflictError,
)
from .exact import (
    design_exact_global_min,
    design_exact_one_stage,
    design_exact_two_stage,
    exact_oc,
    exact_pet,
    exact_pi_high_one_stage,
    exact_pi_low_two_stage,
)
from .normal import (
    design_one_stage,
    design_two_stage,
    final_boundary_star,
    interim_boundary_star,
    pcs_high_two_stage,
    pcs_one_stage,
)
from .simulate import (
    DeviationType,
    sensitivity_n_deviation,
    sensitivity_p_high,
    simulate_one_stage,
    simulate_two_stage,
    simulate_umet,
    umet_decide,
)
from .stats import (
    LatticeDist,
    binom_diff_dist,
    binom_pmf,
    bvn_upper,
    lattice_convolve,
    norm_cdf,
    norm_quantile,
)
from .types import (
    Decision,
    DecisionKind,
    DesignGoal,
    ExactOC,
    ExactSearchConfig,
    Method,
    OneStageDesign,
    SimConfig,
    SimResult,
    Stage,
    TwoStageDesign,
    UmetConfig,
)

__version__ = "0.1.0"
