"""HTTP JSON service exposing the design, OC, simulation, and conduct
operations for UI consumption.

Responses are rendered through the same serialization path as the CLI, so a
given request yields byte-identical JSON on both surfaces.  Errors are
RFC-7807-style problem documents.  Simulation requests can run as background
jobs; job state is in-memory and lost on restart.
"""

from __future__ import annotations

import math
from typing import Optional, Union

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from . import exact, simulate
from .conduct import (
    Arm,
    TrialStore,
    decide_final,
    decide_interim,
    new_trial,
    record_decision,
    record_responses,
    state_document,
)
from .errors import (
    DomainError,
    InfeasibleDesignError,
    InsufficientDataError,
    NotApplicableError,
    UnknownTrialError,
    ValidationError,
    VersionConflictError,
)
from .requests import DesignRequest, run_design_request
from .serialize import (
    decision_payload,
    design_payload,
    dump_json,
    envelope,
    oc_payload,
    sim_result_payload,
)
from .jobs import JobManager
from .types import SimConfig, TwoStageDesign, UmetConfig

__all__ = ["create_app"]

# simulations above this many replicate-draws go to the job queue
ASYNC_DRAW_THRESHOLD = 5_000_000


def _json(payload: dict, status: int = 200) -> Response:
    return Response(content=dump_json(payload), status_code=status,
                    media_type="application/json")


def _problem(status: int, title: str, detail: str) -> Response:
    body = {
        "type": f"about:blank#{title.lower().replace(' ', '-')}",
        "title": title,
        "status": status,
        "detail": detail,
    }
    return Response(content=dump_json(body), status_code=status,
                    media_type="application/problem+json")


def create_app(store_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="dosepick", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    store = TrialStore(store_dir) if store_dir else TrialStore(".dosepick-trials")
    jobs = JobManager(max_workers=2)
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return _problem(400, "Validation failed", str(exc))

    @app.exception_handler(DomainError)
    async def _domain(request: Request, exc: DomainError):
        return _problem(400, "Validation failed", str(exc))

    @app.exception_handler(InfeasibleDesignError)
    async def _infeasible(request: Request, exc: InfeasibleDesignError):
        return _problem(422, "Design infeasible", str(exc))

    @app.exception_handler(UnknownTrialError)
    async def _unknown(request: Request, exc: UnknownTrialError):
        return _problem(404, "Unknown trial", f"no trial {exc.args[0]!r}")

    @app.exception_handler(VersionConflictError)
    async def _conflict(request: Request, exc: VersionConflictError):
        return _problem(409, "Version conflict", str(exc))

    @app.exception_handler(InsufficientDataError)
    async def _insufficient(request: Request, exc: InsufficientDataError):
        return _problem(409, "Insufficient data", str(exc))

    @app.exception_handler(NotApplicableError)
    async def _notapplicable(request: Request, exc: NotApplicableError):
        return _problem(400, "Not applicable", str(exc))

    @app.post("/v1/design")
    async def design_endpoint(payload: dict):
        req = DesignRequest.from_payload(payload)
        design = run_design_request(req)
        return _json(envelope("design", req.resolved(), design_payload(design)))

    @app.post("/v1/oc/exact")
    async def oc_endpoint(payload: dict):
        if "design" not in payload:
            raise ValidationError("body must contain a design request")
        req = DesignRequest.from_payload(payload["design"])
        try:
            p_low = float(payload["p_low"])
            p_high = float(payload["p_high"])
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}")
        design = run_design_request(req)
        oc = exact.exact_oc(design, p_low, p_high)
        inputs = {"design": req.resolved(), "p_low": p_low, "p_high": p_high}
        body = {"design": design_payload(design), "oc": oc_payload(oc)}
        return _json(envelope("oc_exact", inputs, body))

    def _sim_config(payload: dict) -> SimConfig:
        sim = payload.get("sim")
        if not isinstance(sim, dict):
            raise ValidationError("body must contain a sim config")
        if "seed" not in sim:
            raise ValidationError("sim.seed is required; no implicit entropy")
        allowed = {"seed", "true_p_low", "true_p_high", "n_reps",
                   "enrolled_n_low", "enrolled_n_high", "enrolled_n1_low",
                   "enrolled_n1_high"}
        unknown = set(sim) - allowed
        if unknown:
            raise ValidationError(f"unknown sim fields: {sorted(unknown)}")
        return SimConfig(**sim)

    @app.post("/v1/simulate")
    async def simulate_endpoint(payload: dict):
        if "design" not in payload:
            raise ValidationError("body must contain a design request")
        req = DesignRequest.from_payload(payload["design"])
        cfg = _sim_config(payload)
        design = run_design_request(req)
        inputs = {"design": req.resolved(), "sim": sim_result_inputs(cfg),
                  "async_job": bool(payload.get("async_job", False))}

        def work() -> dict:
            res = simulate.simulate_design(design, cfg)
            return envelope("simulate", inputs,
                            {"design": design_payload(design),
                             "result": sim_result_payload(res)})

        budget = 4 if isinstance(design, TwoStageDesign) else 2
        if payload.get("async_job") or cfg.n_reps * budget > ASYNC_DRAW_THRESHOLD:
            job_id = jobs.submit(work)
            return _json(envelope("job", inputs, {"job_id": job_id,
                                                  "status": "queued"}), 202)
        return _json(work())

    @app.post("/v1/sensitivity")
    async def sensitivity_endpoint(payload: dict):
        if "design" not in payload:
            raise ValidationError("body must contain a design request")
        req = DesignRequest.from_payload(payload["design"])
        cfg = _sim_config(payload)
        kind = payload.get("kind")
        design = run_design_request(req)
        if kind == "p_high":
            grid = [float(x) for x in payload.get("grid", [])]
            if not grid:
                raise ValidationError("grid must be a non-empty list")
            rows = simulate.sensitivity_p_high(req.goal(), grid, cfg)
            body = [{"p_high_true": p,
                     "equal_rates": sim_result_payload(sl),
                     "margin_gap": sim_result_payload(sh)}
                    for p, sl, sh in rows]
        elif kind == "n_deviation":
            grid = [int(x) for x in payload.get("grid", [])]
            if not grid:
                raise ValidationError("grid must be a non-empty list")
            dev = payload.get("deviation_type")
            rows = simulate.sensitivity_n_deviation(design, dev, grid, cfg)
            body = [{"offset": off, "result": sim_result_payload(res)}
                    for off, res in rows]
        else:
            raise ValidationError("kind must be p_high or n_deviation")
        inputs = {"design": req.resolved(), "kind": kind,
                  "grid": payload.get("grid"),
                  "deviation_type": payload.get("deviation_type"),
                  "sim": sim_result_inputs(cfg)}
        return _json(envelope("sensitivity", inputs, {"rows": body}))

    @app.post("/v1/trials")
    async def create_trial(payload: dict):
        trial_id = payload.get("trial_id")
        if not trial_id:
            raise ValidationError("trial_id is required")
        if store.exists(trial_id):
            raise VersionConflictError(f"trial {trial_id!r} already exists")
        req = DesignRequest.from_payload(payload.get("design", {}))
        design = run_design_request(req)
        state = store.save(new_trial(trial_id, design))
        return _json(envelope("trial", {"trial_id": trial_id,
                                        "design": req.resolved()},
                              state_document(state)), 201)

    @app.get("/v1/trials/{trial_id}")
    async def get_trial(trial_id: str):
        state = store.load(trial_id)
        return _json(envelope("trial", {"trial_id": trial_id},
                              state_document(state)))

    @app.post("/v1/trials/{trial_id}/responses")
    async def post_responses(trial_id: str, payload: dict):
        state = store.load(trial_id)
        expected = payload.get("version")
        if expected is not None and expected != state.version:
            raise VersionConflictError(
                f"expected version {expected}, trial is at {state.version}")
        for key in ("stage", "arm", "enrolled_delta", "responses_delta"):
            if key not in payload:
                raise ValidationError(f"missing field {key!r}")
        state = record_responses(state, int(payload["stage"]),
                                 payload["arm"], int(payload["enrolled_delta"]),
                                 int(payload["responses_delta"]))
        state = store.save(state)
        return _json(envelope("trial", {"trial_id": trial_id,
                                        "update": payload},
                              state_document(state)))

    @app.post("/v1/trials/{trial_id}/decision")
    async def post_decision(trial_id: str, payload: dict):
        state = store.load(trial_id)
        expected = payload.get("version")
        if expected is not None and expected != state.version:
            raise VersionConflictError(
                f"expected version {expected}, trial is at {state.version}")
        analysis = payload.get("analysis")
        force = bool(payload.get("force", False))
        if analysis == "interim":
            if not isinstance(state.design, TwoStageDesign):
                raise NotApplicableError("interim decision on a one-stage trial")
            planned = (state.design.n1_low, state.design.n1_high)
            observed = (state.stage1.low.enrolled, state.stage1.high.enrolled)
            if observed != planned and not force:
                raise InsufficientDataError(
                    f"stage-1 counts {observed} differ from plan {planned}; "
                    "pass force=true to decide on observed data")
            decision = decide_interim(state)
        elif analysis == "final":
            planned = (state.design.n_low, state.design.n_high)
            low, high = state.pooled(Arm.LOW), state.pooled(Arm.HIGH)
            observed = (low.enrolled, high.enrolled)
            if observed != planned and not force:
                raise InsufficientDataError(
                    f"pooled counts {observed} differ from plan {planned}; "
                    "pass force=true to decide on observed data")
            decision = decide_final(state)
        else:
            raise ValidationError("analysis must be interim or final")
        state = record_decision(state, decision, analysis)
        state = store.save(state)
        body = {"decision": decision_payload(decision),
                "trial": state_document(state)}
        return _json(envelope("decision", {"trial_id": trial_id,
                                           "analysis": analysis,
                                           "force": force}, body))

    @app.get("/v1/jobs/{job_id}")
    async def get_job(job_id: str):
        record = jobs.get(job_id)
        if record is None:
            return _problem(404, "Unknown job", f"no job {job_id!r}")
        body = {"job_id": record.job_id, "status": record.status}
        if record.status == "done":
            body["result"] = record.result
        if record.status == "failed":
            body["error"] = record.error
        return _json(envelope("job", {"job_id": job_id}, body))

    return app


def sim_result_inputs(cfg: SimConfig) -> dict:
    return {
        "seed": cfg.seed, "n_reps": cfg.n_reps,
        "true_p_low": cfg.true_p_low, "true_p_high": cfg.true_p_high,
        "enrolled_n_low": cfg.enrolled_n_low,
        "enrolled_n_high": cfg.enrolled_n_high,
        "enrolled_n1_low": cfg.enrolled_n1_low,
        "enrolled_n1_high": cfg.enrolled_n1_high,
    }
