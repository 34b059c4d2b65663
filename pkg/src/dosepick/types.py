"""Domain types shared by the design engines, simulators, and surfaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple

from .errors import ValidationError

__all__ = [
    "Method",
    "Stage",
    "DecisionKind",
    "DesignGoal",
    "NormalApproxContext",
    "OneStageDesign",
    "TwoStageDesign",
    "ExactSearchConfig",
    "ExactOC",
    "SimConfig",
    "SimResult",
    "UmetSimResult",
    "UmetConfig",
    "Decision",
]


class Method(str, Enum):
    NORMAL_APPROX = "NormalApprox"
    EXACT = "Exact"
    EXACT_GLOBAL_MIN = "ExactGlobalMin"


class Stage(str, Enum):
    ONE = "One"
    TWO = "Two"


class DecisionKind(str, Enum):
    SELECT_LOW = "SelectLow"
    SELECT_HIGH = "SelectHigh"
    CONTINUE = "ContinueToStageTwo"
    CONSIDER_HIGH = "ConsiderHigh"  # comparator-only outcome


def _check_prob(name: str, value: float, violations: list, *, open_lo=False,
                open_hi=False) -> None:
    lo_ok = value > 0.0 if open_lo else value >= 0.0
    hi_ok = value < 1.0 if open_hi else value <= 1.0
    if not (lo_ok and hi_ok and math.isfinite(value)):
        lo, hi = ("(" if open_lo else "["), (")" if open_hi else "]")
        violations.append(f"{name}={value!r} outside {lo}0, 1{hi}")


@dataclass(frozen=True)
class DesignGoal:
    """Designer inputs: anticipated high-dose response rate, margin, target
    selection accuracies, allocation ratio (high:low), and optional interim
    information fraction."""

    p_high: float
    delta: float
    alpha_low: float
    alpha_high: float
    ratio: float = 1.0
    omega: Optional[float] = None

    def __post_init__(self):
        v: list[str] = []
        _check_prob("p_high", self.p_high, v, open_lo=True, open_hi=True)
        if not (0.0 < self.delta < 1.0):
            v.append(f"delta={self.delta!r} outside (0, 1)")
        if not self.delta < self.p_high:
            v.append(f"delta={self.delta!r} must be < p_high={self.p_high!r}")
        if self.p_high - self.delta <= 0.0:
            v.append("p_high - delta must be positive")
        # both selection targets must exceed coin-flip accuracy
        if not 0.5 < self.alpha_low < 1.0:
            v.append(f"alpha_low={self.alpha_low!r} outside (0.5, 1)")
        if not 0.5 < self.alpha_high < 1.0:
            v.append(f"alpha_high={self.alpha_high!r} outside (0.5, 1)")
        if not (self.ratio > 0.0 and math.isfinite(self.ratio)):
            v.append(f"ratio={self.ratio!r} must be a positive real")
        if self.omega is not None and not (0.0 < self.omega < 1.0):
            v.append(f"omega={self.omega!r} outside (0, 1)")
        if v:
            raise ValidationError(v)

    def require_omega(self) -> float:
        if self.omega is None:
            raise ValidationError("omega must be set for two-stage designs")
        return self.omega


@dataclass(frozen=True)
class NormalApproxContext:
    """Standard deviations of the response-rate difference under the two
    anchoring scenarios, on the per-low-arm-sample scale."""

    sigma_low: float
    sigma_high: float

    def __post_init__(self):
        if not (self.sigma_low > 0 and self.sigma_high > 0):
            raise ValidationError("sigma_low and sigma_high must be positive")

    @classmethod
    def from_goal(cls, goal: DesignGoal) -> "NormalApproxContext":
        ph, d, c = goal.p_high, goal.delta, goal.ratio
        return cls(
            sigma_low=math.sqrt(ph * (1 - ph) * (1 + 1 / c)),
            sigma_high=math.sqrt((ph - d) * (1 - ph + d) + ph * (1 - ph) / c),
        )


@dataclass(frozen=True)
class OneStageDesign:
    """A single-look design: decision boundary and per-arm sample sizes."""

    lambda_: float
    n_low: int
    n_high: int
    lambda_interval: Tuple[float, float]
    achieved_pcs_low: float
    achieved_pcs_high: float
    method: Method
    goal: DesignGoal
    lambda_exact: Optional[Fraction] = None  # grid value, exact engines only

    def __post_init__(self):
        v: list[str] = []
        lo, hi = self.lambda_interval
        if not (lo <= self.lambda_ <= hi):
            v.append(f"lambda={self.lambda_!r} outside feasible interval "
                     f"({lo!r}, {hi!r})")
        # the exact grid search may legitimately land on lambda = 0
        if not (0.0 <= self.lambda_ <= self.goal.delta):
            v.append(f"lambda={self.lambda_!r} outside [0, delta]")
        if self.n_low < 1 or self.n_high < 1:
            v.append("sample sizes must be >= 1")
        if v:
            raise ValidationError(v)


@dataclass(frozen=True)
class TwoStageDesign:
    """A design with one interim look: interim/final boundaries, stage-1 and
    total per-arm sample sizes, and (for the normal engine) the standardized
    boundaries they came from."""

    lambda1: float
    lambda_: float
    n1_low: int
    n1_high: int
    n_low: int
    n_high: int
    omega: float
    method: Method
    goal: DesignGoal
    lambda1_star: Optional[float] = None
    lambda_star: Optional[float] = None
    achieved_pcs_low: Optional[float] = None
    achieved_pcs_high: Optional[float] = None
    lambda1_exact: Optional[Fraction] = None
    lambda_exact: Optional[Fraction] = None

    def __post_init__(self):
        v: list[str] = []
        if not (0.0 <= self.lambda_ <= self.lambda1 <= 1.0):
            v.append(f"boundaries must satisfy 0 <= lambda <= lambda1 <= 1, "
                     f"got lambda={self.lambda_!r}, lambda1={self.lambda1!r}")
        if not (1 <= self.n1_low <= self.n_low and 1 <= self.n1_high <= self.n_high):
            v.append("stage-1 sizes must be in [1, total]")
        if self.n1_low != math.ceil(self.omega * self.n_low):
            v.append(f"n1_low={self.n1_low} != ceil(omega * n_low)")
        if v:
            raise ValidationError(v)


def _as_step(value) -> Fraction:
    """Grid steps arrive as floats like 0.002; read them as decimals."""
    f = Fraction(str(value)) if not isinstance(value, Fraction) else value
    if not (0 < f <= Fraction(1, 100)):
        raise ValidationError(f"grid step {value!r} outside (0, 0.01]")
    return f


@dataclass(frozen=True)
class ExactSearchConfig:
    """Search granularity and cap for the exact-binomial engines."""

    lambda_step: Fraction = Fraction(2, 1000)
    lambda1_step: Fraction = Fraction(2, 1000)
    n_cap: int = 500

    def __post_init__(self):
        object.__setattr__(self, "lambda_step", _as_step(self.lambda_step))
        object.__setattr__(self, "lambda1_step", _as_step(self.lambda1_step))
        if self.n_cap < 1:
            raise ValidationError(f"n_cap={self.n_cap!r} must be >= 1")


@dataclass(frozen=True)
class ExactOC:
    """Exact operating characteristics of a design at one true (p_low, p_high).

    ``pcs_low``/``pcs_high`` are the probabilities of selecting the low/high
    dose (they sum to 1).  The early-termination and expected-size fields are
    indexed per arm; the only early stop selects the high dose, so both pet
    fields carry that same trial-level probability, while the expected sizes
    differ between arms under unequal allocation.
    """

    pcs_low: float
    pcs_high: float
    pet_low: float
    pet_high: float
    en_low: float
    en_high: float


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo configuration: replicate count, seed, truth, and the
    actually-enrolled sizes (which may deviate from the design)."""

    seed: int
    true_p_low: float
    true_p_high: float
    n_reps: int = 10_000
    enrolled_n_low: Optional[int] = None
    enrolled_n_high: Optional[int] = None
    enrolled_n1_low: Optional[int] = None
    enrolled_n1_high: Optional[int] = None

    def __post_init__(self):
        v: list[str] = []
        if self.n_reps < 1:
            v.append(f"n_reps={self.n_reps!r} must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            v.append("seed must be a 64-bit unsigned integer")
        _check_prob("true_p_low", self.true_p_low, v)
        _check_prob("true_p_high", self.true_p_high, v)
        for name in ("enrolled_n_low", "enrolled_n_high",
                     "enrolled_n1_low", "enrolled_n1_high"):
            val = getattr(self, name)
            if val is not None and val < 1:
                v.append(f"{name}={val!r} must be >= 1")
        if v:
            raise ValidationError(v)


@dataclass(frozen=True)
class SimResult:
    """Aggregated simulation output.

    ``scenario`` records which truth anchored the correct-selection count:
    "S_L" (rates equal, low dose correct), "S_H" (gap >= delta, high dose
    correct), or "intermediate" (gap in (0, delta)); in the intermediate case
    ``pcs`` is the probability of selecting the high dose and ``anchored`` is
    False because neither dose is designated correct.
    """

    pcs: float
    pet: float
    en: float
    mc_se: float
    scenario: str = "S_L"
    anchored: bool = True


@dataclass(frozen=True)
class UmetSimResult(SimResult):
    """Comparator simulation output: headline ``pcs`` applies the reporting
    convention (consider-high counted as selecting the high dose); the raw
    three-way decision fractions are preserved alongside."""

    frac_select_low: float = 0.0
    frac_select_high: float = 0.0
    frac_consider_high: float = 0.0


@dataclass(frozen=True)
class UmetConfig:
    """Utility-based comparator settings.

    Defaults follow the published description of the comparator; note the
    toxicity defaults place the higher burden on the LOW arm, which inverts
    dose-toxicity monotonicity.  The table-reproduction fixtures use the
    swapped, monotone assignment instead (see the fixtures module) because
    that is what the published operating characteristics correspond to.
    """

    utilities: Tuple[float, float, float, float] = (100.0, 35.0, 65.0, 0.0)
    gamma_high: float = 0.2
    gamma_low: float = 0.34
    tox_low: float = 0.3
    tox_high: float = 0.25

    def __post_init__(self):
        u1, u2, u3, u4 = self.utilities
        v: list[str] = []
        if not all(0.0 <= u <= 100.0 for u in self.utilities):
            v.append("utilities must lie in [0, 100]")
        if not (u1 >= u3 and u1 >= u2 >= u4):
            v.append("utilities must satisfy u1 >= u3 and u1 >= u2 >= u4")
        if not self.gamma_low > self.gamma_high:
            v.append("gamma_low must exceed gamma_high")
        _check_prob("gamma_high", self.gamma_high, v, open_lo=True, open_hi=True)
        _check_prob("gamma_low", self.gamma_low, v, open_lo=True, open_hi=True)
        _check_prob("tox_low", self.tox_low, v)
        _check_prob("tox_high", self.tox_high, v)
        if v:
            raise ValidationError(v)

    @property
    def unit_utilities(self) -> Tuple[float, float, float, float]:
        u = self.utilities
        return (u[0] / 100.0, u[1] / 100.0, u[2] / 100.0, u[3] / 100.0)


@dataclass(frozen=True)
class Decision:
    """Outcome of applying a decision rule to observed counts."""

    kind: DecisionKind
    observed_diff: float
    boundary: float
