"""Command-line surface: design, OC, simulation, conduct, table
reproduction, and the HTTP service runner.

Exit codes: 0 success, 2 validation/usage error, 3 infeasible design,
1 reproduction mismatch.  JSON output is byte-identical to the HTTP
service for the same request.
"""

from __future__ import annotations

import csv as _csv
import io
import sys
from pathlib import Path
from typing import Optional

import click

from . import exact, simulate, tables
from .conduct import (
    TrialStore,
    decide_final,
    decide_interim,
    new_trial,
    record_decision,
    record_responses,
    state_document,
)
from .errors import (
    DosepickError,
    InfeasibleDesignError,
    UnknownTrialError,
    ValidationError,
    VersionConflictError,
)
from .requests import DesignRequest, run_design_request
from .serialize import (
    CSV_COLUMNS,
    decision_payload,
    design_csv_row,
    design_payload,
    dump_json,
    envelope,
    oc_payload,
    sim_result_payload,
)
from .types import SimConfig, TwoStageDesign, UmetConfig

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_config(path: Optional[str]) -> dict:
    """Optional key-value config file; keys mirror the long flag names."""
    if not path:
        return {}
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {raw!r} is not key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _resolve(flag_value, config: dict, key: str, cast):
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return None


def _design_request(config_path, p_high, delta, alpha_low, alpha_high, omega,
                    ratio, method, stage, lambda_step, n_cap) -> DesignRequest:
    cfg = _read_config(config_path)
    payload = {
        "p_high": _resolve(p_high, cfg, "p_high", float),
        "delta": _resolve(delta, cfg, "delta", float),
        "alpha_low": _resolve(alpha_low, cfg, "alpha_low", float),
        "alpha_high": _resolve(alpha_high, cfg, "alpha_high", float),
    }
    missing = [k for k, v in payload.items() if v is None]
    if missing:
        raise click.UsageError(f"missing required options: {missing}")
    omega = _resolve(omega, cfg, "omega", float)
    if omega is not None:
        payload["omega"] = omega
    payload["ratio"] = _resolve(ratio, cfg, "ratio", float) or 1.0
    m = _resolve(method, cfg, "method", str)
    if m is not None:
        payload["method"] = m
    s = _resolve(stage, cfg, "stage", str)
    if s is not None:
        payload["stage"] = s
    step = _resolve(lambda_step, cfg, "lambda_step", float)
    if step is not None:
        payload["lambda_step"] = step
    cap = _resolve(n_cap, cfg, "n_cap", int)
    if cap is not None:
        payload["n_cap"] = cap
    return DesignRequest.from_payload(payload)


def _design_options(fn):
    opts = [
        click.option("--p-high", type=float, help="anticipated high-dose response rate"),
        click.option("--delta", type=float, help="response-rate margin"),
        click.option("--alpha-low", type=float, help="target accuracy selecting the low dose"),
        click.option("--alpha-high", type=float, help="target accuracy selecting the high dose"),
        click.option("--omega", type=float, help="interim information fraction (two-stage)"),
        click.option("--ratio", type=float, help="allocation ratio high:low (default 1)"),
        click.option("--method", type=str, help="normal | exact | exact-global-min"),
        click.option("--stage", type=str, help="one | two (defaults from omega)"),
        click.option("--lambda-step", type=float, help="exact search grid step"),
        click.option("--n-cap", type=int, help="exact search size cap"),
        click.option("--config", "config_path", type=click.Path(exists=True),
                     help="key = value file mirroring these flags (flags win)"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _render_design(design, req: DesignRequest, fmt: str) -> str:
    if fmt == "json":
        return dump_json(envelope("design", req.resolved(), design_payload(design)))
    if fmt == "csv":
        buf = io.StringIO()
        writer = _csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerow(design_csv_row(design))
        return buf.getvalue().rstrip("\n")
    lines = [f"method        {design.method.value}"]
    if isinstance(design, TwoStageDesign):
        lines += [
            f"lambda1       {design.lambda1:.3f}",
            f"n1 (low/high) {design.n1_low} / {design.n1_high}",
            f"lambda        {design.lambda_:.3f}",
            f"n (low/high)  {design.n_low} / {design.n_high}",
        ]
    else:
        lines += [
            f"lambda        {design.lambda_:.3f}",
            f"n (low/high)  {design.n_low} / {design.n_high}",
        ]
    if design.achieved_pcs_low is not None:
        lines.append(f"achieved PCS  {design.achieved_pcs_low:.4f} (low) / "
                     f"{design.achieved_pcs_high:.4f} (high)")
    return "\n".join(lines)


@click.group()
def main():
    """Design optimization and conduct for two-arm dose-optimization trials."""


@main.command()
@_design_options
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]),
              default="table", show_default=True)
def design(fmt, config_path, p_high, delta, alpha_low, alpha_high, omega, ratio,
           method, stage, lambda_step, n_cap):
    """Compute the minimal design for a goal."""
    try:
        req = _design_request(config_path, p_high, delta, alpha_low, alpha_high,
                              omega, ratio, method, stage, lambda_step, n_cap)
        result = run_design_request(req)
    except InfeasibleDesignError as exc:
        _fail(str(exc), EXIT_INFEASIBLE)
    except (ValidationError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        click.echo(_render_design(result, req, fmt))


@main.command()
@_design_options
@click.option("--p-low", type=float, required=True, help="true low-dose rate")
@click.option("--true-p-high", type=float, default=None,
              help="true high-dose rate (default: the design's p-high)")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]),
              default="table", show_default=True)
def oc(fmt, p_low, true_p_high, config_path, p_high, delta, alpha_low,
       alpha_high, omega, ratio, method, stage, lambda_step, n_cap):
    """Exact operating characteristics of the design at a true rate pair."""
    try:
        req = _design_request(config_path, p_high, delta, alpha_low, alpha_high,
                              omega, ratio, method, stage, lambda_step, n_cap)
        design_obj = run_design_request(req)
        ph = true_p_high if true_p_high is not None else req.p_high
        result = exact.exact_oc(design_obj, p_low, ph)
    except InfeasibleDesignError as exc:
        _fail(str(exc), EXIT_INFEASIBLE)
    except (ValidationError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        inputs = {"design": req.resolved(), "p_low": p_low, "p_high": ph}
        if fmt == "json":
            click.echo(dump_json(envelope(
                "oc_exact", inputs,
                {"design": design_payload(design_obj), "oc": oc_payload(result)})))
        else:
            click.echo(f"Pr(select low)  {result.pcs_low:.4f}")
            click.echo(f"Pr(select high) {result.pcs_high:.4f}")
            click.echo(f"PET             {result.pet_high:.4f}")
            click.echo(f"EN (low/high)   {result.en_low:.2f} / {result.en_high:.2f}")


@main.command("simulate")
@_design_options
@click.option("--p-low", type=float, required=True, help="true low-dose rate")
@click.option("--true-p-high", type=float, default=None)
@click.option("--seed", type=int, required=True, help="simulation seed (required)")
@click.option("--reps", type=int, default=10_000, show_default=True)
@click.option("--enrolled-n-low", type=int, default=None)
@click.option("--enrolled-n-high", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]),
              default="table", show_default=True)
def simulate_cmd(fmt, p_low, true_p_high, seed, reps, enrolled_n_low,
                 enrolled_n_high, config_path, p_high, delta, alpha_low,
                 alpha_high, omega, ratio, method, stage, lambda_step, n_cap):
    """Monte Carlo operating characteristics of the design."""
    try:
        req = _design_request(config_path, p_high, delta, alpha_low, alpha_high,
                              omega, ratio, method, stage, lambda_step, n_cap)
        design_obj = run_design_request(req)
        ph = true_p_high if true_p_high is not None else req.p_high
        cfg = SimConfig(seed=seed, true_p_low=p_low, true_p_high=ph,
                        n_reps=reps, enrolled_n_low=enrolled_n_low,
                        enrolled_n_high=enrolled_n_high)
        res = simulate.simulate_design(design_obj, cfg)
    except InfeasibleDesignError as exc:
        _fail(str(exc), EXIT_INFEASIBLE)
    except (ValidationError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        from .service import sim_result_inputs
        inputs = {"design": req.resolved(), "sim": sim_result_inputs(cfg),
                  "async_job": False}
        if fmt == "json":
            click.echo(dump_json(envelope(
                "simulate", inputs,
                {"design": design_payload(design_obj),
                 "result": sim_result_payload(res)})))
        else:
            click.echo(f"scenario {res.scenario} (anchored={res.anchored})")
            click.echo(f"PCS {res.pcs:.4f}  (mc se {res.mc_se:.4f})")
            click.echo(f"PET {res.pet:.4f}")
            click.echo(f"EN  {res.en:.2f} per low arm")


@main.command()
@click.argument("table_id")
@click.option("--seed", type=int, default=tables.DEFAULT_SEED, show_default=True)
@click.option("--reps", type=int, default=10_000, show_default=True)
@click.option("--verbose", is_flag=True, help="print every cell, not just failures")
def reproduce(table_id, seed, reps, verbose):
    """Recompute a published table (t1-t4, s1-s12) and report per-cell matches."""
    try:
        report = tables.reproduce(table_id, seed=seed, n_reps=reps)
    except KeyError as exc:
        _fail(str(exc), EXIT_VALIDATION)
        return
    for cell in report.cells:
        if verbose or cell.status != "pass":
            click.echo(f"[{cell.status:7s}] {cell.coord} {cell.metric}: "
                       f"expected {cell.expected} got {cell.actual:.4f} "
                       f"(tol {cell.tolerance:.4g})")
    click.echo(report.summary())
    if not report.ok:
        sys.exit(1)


@main.group()
def trial():
    """Create, update, and decide a persisted trial."""


def _store(store_dir: str) -> TrialStore:
    return TrialStore(store_dir)


@trial.command("init")
@_design_options
@click.option("--id", "trial_id", required=True)
@click.option("--store", "store_dir", default=".dosepick-trials", show_default=True)
def trial_init(trial_id, store_dir, config_path, p_high, delta, alpha_low,
               alpha_high, omega, ratio, method, stage, lambda_step, n_cap):
    """Create a trial around a freshly computed design."""
    try:
        req = _design_request(config_path, p_high, delta, alpha_low, alpha_high,
                              omega, ratio, method, stage, lambda_step, n_cap)
        design_obj = run_design_request(req)
        store = _store(store_dir)
        if store.exists(trial_id):
            _fail(f"trial {trial_id!r} already exists", EXIT_VALIDATION)
        state = store.save(new_trial(trial_id, design_obj))
    except InfeasibleDesignError as exc:
        _fail(str(exc), EXIT_INFEASIBLE)
    except (ValidationError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        click.echo(dump_json(envelope("trial", {"trial_id": trial_id,
                                                "design": req.resolved()},
                                      state_document(state))))


@trial.command("record")
@click.option("--id", "trial_id", required=True)
@click.option("--store", "store_dir", default=".dosepick-trials", show_default=True)
@click.option("--stage", type=int, required=True)
@click.option("--arm", type=click.Choice(["low", "high"]), required=True)
@click.option("--enrolled", type=int, required=True)
@click.option("--responses", type=int, required=True)
def trial_record(trial_id, store_dir, stage, arm, enrolled, responses):
    """Add enrolled/response counts to one arm at one stage."""
    try:
        store = _store(store_dir)
        state = store.load(trial_id)
        state = record_responses(state, stage, arm, enrolled, responses)
        state = store.save(state)
    except UnknownTrialError:
        _fail(f"no trial {trial_id!r}", EXIT_VALIDATION)
    except (ValidationError, VersionConflictError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        click.echo(dump_json(envelope("trial", {"trial_id": trial_id},
                                      state_document(state))))


@trial.command("decide")
@click.option("--id", "trial_id", required=True)
@click.option("--store", "store_dir", default=".dosepick-trials", show_default=True)
@click.option("--analysis", type=click.Choice(["interim", "final"]), required=True)
def trial_decide(trial_id, store_dir, analysis):
    """Apply the interim or final decision rule to the stored counts."""
    try:
        store = _store(store_dir)
        state = store.load(trial_id)
        decision = decide_interim(state) if analysis == "interim" else decide_final(state)
        state = record_decision(state, decision, analysis)
        state = store.save(state)
    except UnknownTrialError:
        _fail(f"no trial {trial_id!r}", EXIT_VALIDATION)
    except (ValidationError, VersionConflictError, DosepickError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    else:
        click.echo(dump_json(envelope("decision", {"trial_id": trial_id,
                                                   "analysis": analysis},
                                      {"decision": decision_payload(decision),
                                       "trial": state_document(state)})))


@trial.command("show")
@click.option("--id", "trial_id", required=True)
@click.option("--store", "store_dir", default=".dosepick-trials", show_default=True)
def trial_show(trial_id, store_dir):
    try:
        state = _store(store_dir).load(trial_id)
    except UnknownTrialError:
        _fail(f"no trial {trial_id!r}", EXIT_VALIDATION)
    else:
        click.echo(dump_json(envelope("trial", {"trial_id": trial_id},
                                      state_document(state))))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--store", "store_dir", default=".dosepick-trials", show_default=True)
def serve(host, port, store_dir):
    """Run the HTTP JSON service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_dir), host=host, port=port)


if __name__ == "__main__":
    main()
