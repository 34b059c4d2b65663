"""Request resolution shared by the CLI and the HTTP service.

A design request mirrors the goal fields plus the method/stage selection and
exact-search overrides; both surfaces funnel through ``run_design_request``
so they cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import exact, normal
from .errors import ValidationError
from .types import (
    DesignGoal,
    ExactSearchConfig,
    Method,
    OneStageDesign,
    Stage,
    TwoStageDesign,
)

__all__ = ["DesignRequest", "run_design_request"]

_METHOD_ALIASES = {
    "normal": Method.NORMAL_APPROX,
    "normalapprox": Method.NORMAL_APPROX,
    "exact": Method.EXACT,
    "exact-global-min": Method.EXACT_GLOBAL_MIN,
    "exactglobalmin": Method.EXACT_GLOBAL_MIN,
}


def parse_method(value: Union[str, Method, None]) -> Method:
    if value is None:
        return Method.NORMAL_APPROX
    if isinstance(value, Method):
        return value
    key = value.replace("_", "-").lower()
    if key not in _METHOD_ALIASES:
        raise ValidationError(
            f"unknown method {value!r}; expected one of "
            "normal, exact, exact-global-min")
    return _METHOD_ALIASES[key]


def parse_stage(value: Union[str, Stage, None], omega: Optional[float]) -> Stage:
    if value is None:
        return Stage.TWO if omega is not None else Stage.ONE
    if isinstance(value, Stage):
        return value
    key = value.lower()
    if key in ("one", "1"):
        return Stage.ONE
    if key in ("two", "2"):
        return Stage.TWO
    raise ValidationError(f"unknown stage {value!r}; expected one or two")


@dataclass(frozen=True)
class DesignRequest:
    p_high: float
    delta: float
    alpha_low: float
    alpha_high: float
    ratio: float = 1.0
    omega: Optional[float] = None
    method: Method = Method.NORMAL_APPROX
    stage: Stage = Stage.ONE
    lambda_step: Optional[float] = None
    lambda1_step: Optional[float] = None
    n_cap: Optional[int] = None

    def __post_init__(self):
        if self.method is Method.EXACT_GLOBAL_MIN and self.stage is not Stage.TWO:
            raise ValidationError("method exact-global-min requires stage two")
        if self.stage is Stage.TWO and self.omega is None:
            raise ValidationError("stage two requires omega")

    @classmethod
    def from_payload(cls, payload: dict) -> "DesignRequest":
        known = {"p_high", "delta", "alpha_low", "alpha_high", "ratio", "omega",
                 "method", "stage", "lambda_step", "lambda1_step", "n_cap"}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"unknown design fields: {sorted(unknown)}")
        missing = [k for k in ("p_high", "delta", "alpha_low", "alpha_high")
                   if k not in payload]
        if missing:
            raise ValidationError(f"missing design fields: {missing}")
        omega = payload.get("omega")
        return cls(
            p_high=float(payload["p_high"]),
            delta=float(payload["delta"]),
            alpha_low=float(payload["alpha_low"]),
            alpha_high=float(payload["alpha_high"]),
            ratio=float(payload.get("ratio", 1.0)),
            omega=None if omega is None else float(omega),
            method=parse_method(payload.get("method")),
            stage=parse_stage(payload.get("stage"), omega),
            lambda_step=payload.get("lambda_step"),
            lambda1_step=payload.get("lambda1_step"),
            n_cap=payload.get("n_cap"),
        )

    def goal(self) -> DesignGoal:
        return DesignGoal(p_high=self.p_high, delta=self.delta,
                          alpha_low=self.alpha_low, alpha_high=self.alpha_high,
                          ratio=self.ratio,
                          omega=self.omega if self.stage is Stage.TWO else None)

    def search_config(self) -> ExactSearchConfig:
        kwargs = {}
        if self.lambda_step is not None:
            kwargs["lambda_step"] = self.lambda_step
        if self.lambda1_step is not None:
            kwargs["lambda1_step"] = self.lambda1_step
        if self.n_cap is not None:
            kwargs["n_cap"] = int(self.n_cap)
        return ExactSearchConfig(**kwargs)

    def resolved(self) -> dict:
        return {
            "p_high": self.p_high, "delta": self.delta,
            "alpha_low": self.alpha_low, "alpha_high": self.alpha_high,
            "ratio": self.ratio, "omega": self.omega,
            "method": self.method.value, "stage": self.stage.value,
            "lambda_step": self.lambda_step, "lambda1_step": self.lambda1_step,
            "n_cap": self.n_cap,
        }


def run_design_request(req: DesignRequest) -> Union[OneStageDesign, TwoStageDesign]:
    goal = req.goal()
    if req.method is Method.NORMAL_APPROX:
        if req.stage is Stage.ONE:
            return normal.design_one_stage(goal)
        return normal.design_two_stage(goal)
    cfg = req.search_config()
    if req.method is Method.EXACT_GLOBAL_MIN:
        return exact.design_exact_global_min(goal, cfg)
    if req.stage is Stage.ONE:
        return exact.design_exact_one_stage(goal, cfg)
    return exact.design_exact_two_stage(goal, cfg)
