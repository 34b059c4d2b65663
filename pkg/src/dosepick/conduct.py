"""Trial-conduct decision engine and persistence.

Observed response-rate differences are compared against stored boundaries in
exact rational arithmetic (integer cross-multiplication); boundary cases
decide trials, so no epsilon ambiguity is tolerated.  Trial states persist as
versioned JSON documents in a directory store, one file per trial, with an
optimistic version check standing in for locking.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple, Union

from .errors import (
    InsufficientDataError,
    NotApplicableError,
    UnknownTrialError,
    ValidationError,
    VersionConflictError,
)
from .serialize import design_from_payload, design_payload
from .types import Decision, DecisionKind, OneStageDesign, TwoStageDesign

__all__ = [
    "Arm",
    "TrialStatus",
    "ArmCounts",
    "StageCounts",
    "TrialState",
    "new_trial",
    "record_responses",
    "decide_interim",
    "decide_final",
    "record_decision",
    "replay_decisions",
    "TrialStore",
]

SCHEMA = "dosepick/trial-state@1"


class Arm(str, Enum):
    LOW = "low"
    HIGH = "high"


class TrialStatus(str, Enum):
    ENROLLING = "Enrolling"
    INTERIM_DONE = "InterimDone"
    CLOSED = "Closed"


_STATUS_ORDER = {TrialStatus.ENROLLING: 0, TrialStatus.INTERIM_DONE: 1,
                 TrialStatus.CLOSED: 2}


@dataclass(frozen=True)
class ArmCounts:
    enrolled: int = 0
    responses: int = 0

    def __post_init__(self):
        if self.enrolled < 0 or self.responses < 0:
            raise ValidationError("counts must be nonnegative")
        if self.responses > self.enrolled:
            raise ValidationError(
                f"responses={self.responses} exceed enrolled={self.enrolled}")


@dataclass(frozen=True)
class StageCounts:
    low: ArmCounts = ArmCounts()
    high: ArmCounts = ArmCounts()

    def arm(self, arm: Arm) -> ArmCounts:
        return self.low if arm is Arm.LOW else self.high


@dataclass(frozen=True)
class LogEntry:
    timestamp: str  # UTC ISO-8601
    decision: Decision
    inputs: dict


@dataclass(frozen=True)
class TrialState:
    trial_id: str
    design: Union[OneStageDesign, TwoStageDesign]
    stage1: StageCounts = StageCounts()
    stage2: Optional[StageCounts] = None
    status: TrialStatus = TrialStatus.ENROLLING
    decision_log: Tuple[LogEntry, ...] = ()
    version: int = 0

    @property
    def is_two_stage(self) -> bool:
        return isinstance(self.design, TwoStageDesign)

    def pooled(self, arm: Arm) -> ArmCounts:
        c1 = self.stage1.arm(arm)
        if self.stage2 is None:
            return c1
        c2 = self.stage2.arm(arm)
        return ArmCounts(c1.enrolled + c2.enrolled, c1.responses + c2.responses)


def new_trial(trial_id: str, design: Union[OneStageDesign, TwoStageDesign]
              ) -> TrialState:
    if not trial_id:
        raise ValidationError("trial_id must be non-empty")
    return TrialState(trial_id=trial_id, design=design)


def record_responses(state: TrialState, stage: int, arm: Union[Arm, str],
                     enrolled_delta: int, responses_delta: int) -> TrialState:
    """Add observed counts; rejects (leaving the state unchanged) anything
    that would break the per-arm invariants.  The decision log is untouched.
    """
    arm = Arm(arm)
    if stage not in (1, 2):
        raise ValidationError(f"stage must be 1 or 2, got {stage!r}")
    if enrolled_delta < 0 or responses_delta < 0:
        raise ValidationError("deltas must be nonnegative")
    if stage == 2 and not state.is_two_stage:
        raise NotApplicableError("one-stage trial has no stage 2")
    if state.status is TrialStatus.CLOSED:
        raise ValidationError("trial is closed")
    target = state.stage1 if stage == 1 else (state.stage2 or StageCounts())
    cur = target.arm(arm)
    new_counts = ArmCounts(cur.enrolled + enrolled_delta,
                           cur.responses + responses_delta)
    new_stage = replace(target, **{arm.value: new_counts})
    if stage == 1:
        return replace(state, stage1=new_stage)
    return replace(state, stage2=new_stage)


def _diff_exceeds(r_high: int, n_high: int, r_low: int, n_low: int,
                  boundary: Union[float, Fraction]) -> bool:
    """Exact test of p_hat_high - p_hat_low > boundary."""
    lam = boundary if isinstance(boundary, Fraction) else Fraction(str(boundary))
    return Fraction(r_high, n_high) - Fraction(r_low, n_low) > lam


def _interim_boundary(design: TwoStageDesign) -> Union[float, Fraction]:
    return design.lambda1_exact if design.lambda1_exact is not None else design.lambda1


def _final_boundary(design) -> Union[float, Fraction]:
    exact = getattr(design, "lambda_exact", None)
    return exact if exact is not None else design.lambda_


def decide_interim(state: TrialState) -> Decision:
    """Interim rule: stop and select the high dose only on a strict
    boundary crossing; otherwise continue.  The low dose is never selected
    early (small interim samples are not trusted for that call)."""
    if not state.is_two_stage:
        raise NotApplicableError("interim decision requires a two-stage design")
    low, high = state.stage1.low, state.stage1.high
    if low.enrolled == 0 or high.enrolled == 0:
        raise InsufficientDataError("no stage-1 patients evaluated in an arm")
    design = state.design
    if (low.enrolled, high.enrolled) != (design.n1_low, design.n1_high):
        warnings.warn("stage-1 enrollment differs from plan; deciding on "
                      "observed counts", stacklevel=2)
    diff = high.responses / high.enrolled - low.responses / low.enrolled
    boundary = _interim_boundary(design)
    if _diff_exceeds(high.responses, high.enrolled, low.responses, low.enrolled,
                     boundary):
        kind = DecisionKind.SELECT_HIGH
    else:
        kind = DecisionKind.CONTINUE
    return Decision(kind=kind, observed_diff=diff, boundary=float(boundary))


def decide_final(state: TrialState) -> Decision:
    """Final rule: select the low dose unless the pooled response-rate
    difference strictly exceeds the boundary (ties go to the low dose)."""
    low, high = state.pooled(Arm.LOW), state.pooled(Arm.HIGH)
    if low.enrolled == 0 or high.enrolled == 0:
        raise InsufficientDataError("no patients evaluated in an arm")
    design = state.design
    if (low.enrolled, high.enrolled) != (design.n_low, design.n_high):
        warnings.warn("enrollment differs from plan; deciding on observed "
                      "counts", stacklevel=2)
    diff = high.responses / high.enrolled - low.responses / low.enrolled
    boundary = _final_boundary(design)
    if _diff_exceeds(high.responses, high.enrolled, low.responses, low.enrolled,
                     boundary):
        kind = DecisionKind.SELECT_HIGH
    else:
        kind = DecisionKind.SELECT_LOW
    return Decision(kind=kind, observed_diff=diff, boundary=float(boundary))


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def record_decision(state: TrialState, decision: Decision,
                    analysis: str) -> TrialState:
    """Append a decision to the log and advance the status monotonically."""
    if analysis not in ("interim", "final"):
        raise ValidationError(f"analysis must be interim or final, got {analysis!r}")
    snapshot = {
        "analysis": analysis,
        "stage1": _stage_doc(state.stage1),
        "stage2": _stage_doc(state.stage2) if state.stage2 else None,
    }
    entry = LogEntry(timestamp=_utc_now(), decision=decision, inputs=snapshot)
    if decision.kind is DecisionKind.CONTINUE:
        new_status = TrialStatus.INTERIM_DONE
    else:
        new_status = TrialStatus.CLOSED
    if _STATUS_ORDER[new_status] < _STATUS_ORDER[state.status]:
        raise ValidationError("status transitions must be monotone")
    return replace(state, status=new_status,
                   decision_log=state.decision_log + (entry,))


def replay_decisions(state: TrialState) -> TrialState:
    """Rebuild the terminal state from the initial counts by re-applying the
    log; used to audit that the log fully determines the state."""
    cur = replace(state, status=TrialStatus.ENROLLING, decision_log=())
    for entry in state.decision_log:
        cur = record_decision(cur, entry.decision, entry.inputs["analysis"])
    return replace(cur, decision_log=state.decision_log)


def _stage_doc(stage: Optional[StageCounts]) -> Optional[dict]:
    if stage is None:
        return None
    return {
        "low": {"enrolled": stage.low.enrolled, "responses": stage.low.responses},
        "high": {"enrolled": stage.high.enrolled, "responses": stage.high.responses},
    }


def _stage_from_doc(doc: Optional[dict]) -> Optional[StageCounts]:
    if doc is None:
        return None
    return StageCounts(
        low=ArmCounts(doc["low"]["enrolled"], doc["low"]["responses"]),
        high=ArmCounts(doc["high"]["enrolled"], doc["high"]["responses"]),
    )


def state_document(state: TrialState) -> dict:
    return {
        "schema": SCHEMA,
        "trial_id": state.trial_id,
        "version": state.version,
        "status": state.status.value,
        "design": design_payload(state.design),
        "stage1": _stage_doc(state.stage1),
        "stage2": _stage_doc(state.stage2),
        "decision_log": [
            {
                "timestamp": e.timestamp,
                "decision": {
                    "kind": e.decision.kind.value,
                    "observed_diff": e.decision.observed_diff,
                    "boundary": e.decision.boundary,
                },
                "inputs": e.inputs,
            }
            for e in state.decision_log
        ],
    }


def state_from_document(doc: dict) -> TrialState:
    if doc.get("schema") != SCHEMA:
        raise ValidationError(f"unsupported trial document schema {doc.get('schema')!r}")
    log = tuple(
        LogEntry(
            timestamp=e["timestamp"],
            decision=Decision(kind=DecisionKind(e["decision"]["kind"]),
                              observed_diff=e["decision"]["observed_diff"],
                              boundary=e["decision"]["boundary"]),
            inputs=e["inputs"],
        )
        for e in doc["decision_log"]
    )
    return TrialState(
        trial_id=doc["trial_id"],
        design=design_from_payload(doc["design"]),
        stage1=_stage_from_doc(doc["stage1"]),
        stage2=_stage_from_doc(doc["stage2"]),
        status=TrialStatus(doc["status"]),
        decision_log=log,
        version=doc["version"],
    )


class TrialStore:
    """Directory-backed store, one JSON document per trial.

    Writes are single-writer per trial id: ``save`` refuses to persist a
    state whose version does not match the document on disk, then bumps the
    version.  Files are replaced atomically.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, trial_id: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in trial_id)
        return self.root / f"{safe}.json"

    def exists(self, trial_id: str) -> bool:
        return self._path(trial_id).exists()

    def list_ids(self) -> list[str]:
        out = []
        for p in sorted(self.root.glob("*.json")):
            try:
                out.append(json.loads(p.read_text())["trial_id"])
            except (json.JSONDecodeError, KeyError):
                continue
        return out

    def load(self, trial_id: str) -> TrialState:
        path = self._path(trial_id)
        if not path.exists():
            raise UnknownTrialError(trial_id)
        return state_from_document(json.loads(path.read_text()))

    def save(self, state: TrialState) -> TrialState:
        path = self._path(state.trial_id)
        if path.exists():
            on_disk = json.loads(path.read_text())["version"]
            if on_disk != state.version:
                raise VersionConflictError(
                    f"trial {state.trial_id!r}: version {state.version} does "
                    f"not match stored version {on_disk}")
        elif state.version != 0:
            raise VersionConflictError(
                f"trial {state.trial_id!r}: new trials must start at version 0")
        bumped = replace(state, version=state.version + 1)
        doc = state_document(bumped)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return bumped
