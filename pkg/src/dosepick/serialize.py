"""Single serialization path shared by the CLI and the HTTP service.

Both surfaces must emit byte-identical JSON for identical requests, so every
payload goes through :func:`dump_json` (sorted keys, compact separators) and
every domain object through the encoders here.
"""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Optional, Union

from .types import (
    Decision,
    DesignGoal,
    ExactOC,
    Method,
    OneStageDesign,
    SimResult,
    TwoStageDesign,
)

try:
    ENGINE_VERSION = version("dosepick")
except PackageNotFoundError:  # running from a source tree
    ENGINE_VERSION = "0.1.0"

CSV_COLUMNS = [
    "p_high", "delta", "alpha_low", "alpha_high", "omega", "ratio", "method",
    "lambda1", "n1_low", "n1_high", "lambda", "n_low", "n_high",
    "pcs_low", "pcs_high", "pet_low", "pet_high", "en_low", "en_high",
]


def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return {k: _plain(v) for k, v in asdict(value).items()}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def goal_payload(goal: DesignGoal) -> dict:
    return _plain(asdict(goal))


def design_payload(design: Union[OneStageDesign, TwoStageDesign]) -> dict:
    """JSON-ready encoding of a design; `lambda_` is published as `lambda`."""
    if isinstance(design, OneStageDesign):
        body = {
            "stage": "One",
            "lambda": design.lambda_,
            "n_low": design.n_low,
            "n_high": design.n_high,
            "lambda_interval": list(design.lambda_interval),
            "achieved_pcs_low": design.achieved_pcs_low,
            "achieved_pcs_high": design.achieved_pcs_high,
        }
    else:
        body = {
            "stage": "Two",
            "lambda1": design.lambda1,
            "lambda": design.lambda_,
            "n1_low": design.n1_low,
            "n1_high": design.n1_high,
            "n_low": design.n_low,
            "n_high": design.n_high,
            "omega": design.omega,
            "lambda1_star": design.lambda1_star,
            "lambda_star": design.lambda_star,
            "achieved_pcs_low": design.achieved_pcs_low,
            "achieved_pcs_high": design.achieved_pcs_high,
        }
    body["method"] = design.method.value
    body["goal"] = goal_payload(design.goal)
    return body


def design_from_payload(payload: dict) -> Union[OneStageDesign, TwoStageDesign]:
    goal = DesignGoal(**payload["goal"])
    method = Method(payload["method"])
    if payload["stage"] == "One":
        return OneStageDesign(
            lambda_=payload["lambda"],
            n_low=payload["n_low"],
            n_high=payload["n_high"],
            lambda_interval=tuple(payload["lambda_interval"]),
            achieved_pcs_low=payload["achieved_pcs_low"],
            achieved_pcs_high=payload["achieved_pcs_high"],
            method=method,
            goal=goal,
        )
    return TwoStageDesign(
        lambda1=payload["lambda1"],
        lambda_=payload["lambda"],
        n1_low=payload["n1_low"],
        n1_high=payload["n1_high"],
        n_low=payload["n_low"],
        n_high=payload["n_high"],
        omega=payload["omega"],
        method=method,
        goal=goal,
        lambda1_star=payload.get("lambda1_star"),
        lambda_star=payload.get("lambda_star"),
        achieved_pcs_low=payload.get("achieved_pcs_low"),
        achieved_pcs_high=payload.get("achieved_pcs_high"),
    )


def oc_payload(oc: ExactOC) -> dict:
    return _plain(asdict(oc))


def sim_result_payload(res: SimResult) -> dict:
    return _plain(asdict(res))


def decision_payload(decision: Decision) -> dict:
    return {
        "kind": decision.kind.value,
        "observed_diff": decision.observed_diff,
        "boundary": decision.boundary,
    }


def envelope(kind: str, inputs: dict, body: dict) -> dict:
    """Every output echoes its resolved inputs and the engine version."""
    return {
        "kind": kind,
        "engine_version": ENGINE_VERSION,
        "inputs": _plain(inputs),
        "result": _plain(body),
    }


def dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def design_csv_row(design: Union[OneStageDesign, TwoStageDesign],
                   oc: Optional[ExactOC] = None) -> dict:
    goal = design.goal
    row = {c: "" for c in CSV_COLUMNS}
    row.update({
        "p_high": goal.p_high, "delta": goal.delta,
        "alpha_low": goal.alpha_low, "alpha_high": goal.alpha_high,
        "omega": "" if goal.omega is None else goal.omega,
        "ratio": goal.ratio, "method": design.method.value,
        "lambda": design.lambda_, "n_low": design.n_low, "n_high": design.n_high,
    })
    if isinstance(design, TwoStageDesign):
        row.update({"lambda1": design.lambda1, "n1_low": design.n1_low,
                    "n1_high": design.n1_high})
    if oc is not None:
        row.update({"pcs_low": oc.pcs_low, "pcs_high": oc.pcs_high,
                    "pet_low": oc.pet_low, "pet_high": oc.pet_high,
                    "en_low": oc.en_low, "en_high": oc.en_high})
    return row
