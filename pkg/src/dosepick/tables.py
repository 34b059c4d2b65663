"""Fixture loading and table reproduction.

The fixtures are CSV transcriptions of the published design and
operating-characteristic tables; every row carries its coordinate (table id
plus the goal parameters).  ``reproduce`` recomputes each cell with the
engines in this package and reports per-cell matches at the documented
tolerances: boundaries to 3 decimals and sizes exactly for design tables,
published-rounding bands for exact OC tables, and Monte Carlo bands for
simulation tables.

Three source-table cells are internally inconsistent with their own
construction; they are listed in ``KNOWN_ANOMALIES`` with the evidence, and
``reproduce`` marks them as documented anomalies instead of silent passes or
hard failures.  ``audit_global_min_divergence`` regenerates the exhaustive
grid dump backing the S11 entry.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from . import exact, normal, simulate
from .types import DesignGoal, ExactSearchConfig, SimConfig, TwoStageDesign, UmetConfig

__all__ = [
    "TABLE_IDS",
    "DEFAULT_SEED",
    "UMET_TABLE_CONFIG",
    "KNOWN_ANOMALIES",
    "load_fixture",
    "reproduce",
    "audit_global_min_divergence",
    "ReproCell",
    "ReproReport",
]

TABLE_IDS = ["t1", "t2", "t3", "t4", "s1", "s2", "s3", "s4", "s5", "s6",
             "s7", "s8", "s9", "s10", "s11", "s12"]

DEFAULT_SEED = 20240901

# Comparator settings that reproduce the published comparator columns.  Two
# deliberate departures from the narrative description, both forced by the
# numbers themselves (see the repro tests): the toxicity burden sits on the
# high arm (monotone dosing), and the effective deferral threshold
# corresponds to gamma_low = 0.23 rather than the quoted 0.34.
UMET_TABLE_CONFIG = UmetConfig(gamma_high=0.2, gamma_low=0.23,
                               tox_low=0.25, tox_high=0.3)

# (table, coordinate) cells whose published values contradict the tables'
# own construction; each entry explains the evidence.
KNOWN_ANOMALIES: Dict[Tuple[str, str], str] = {
    ("s11", "p_high=0.5 delta=0.1 alpha=0.80/0.90"): (
        "published boundary pair (0.08, 0.044) fails its own constraints at "
        "n=229 (exact beta_low=0.7971<0.8, beta_high=0.8930<0.9); the "
        "feasible pair at the same minimum n=229 is (0.106, 0.040) - see "
        "audit_global_min_divergence"),
    ("s12", "p_high=0.5 delta=0.1 alpha=0.80/0.90"): (
        "operating characteristics of the infeasible published s11 pair; "
        "neither the published pair nor the feasible one reproduces the "
        "printed PET/EN values"),
    ("t3", "p_high=0.5 delta=0.15 alpha=0.60/0.60 p_low=0.5 umet"): (
        "printed 0.64 breaks the column pattern (neighboring sizes print "
        "0.85-0.87 and the same size under p_high=0.4 prints 0.85); "
        "simulation at any reading of the comparator gives ~0.84"),
}


@dataclass(frozen=True)
class ReproCell:
    table: str
    coord: str
    metric: str
    expected: float
    actual: float
    tolerance: float
    status: str  # "pass" | "fail" | "anomaly"


@dataclass(frozen=True)
class ReproReport:
    table: str
    cells: List[ReproCell]

    @property
    def n_pass(self) -> int:
        return sum(1 for c in self.cells if c.status == "pass")

    @property
    def n_fail(self) -> int:
        return sum(1 for c in self.cells if c.status == "fail")

    @property
    def n_anomaly(self) -> int:
        return sum(1 for c in self.cells if c.status == "anomaly")

    @property
    def ok(self) -> bool:
        return self.n_fail == 0

    def summary(self) -> str:
        extra = f", {self.n_anomaly} documented anomalies" if self.n_anomaly else ""
        return (f"{self.table.upper()}: {self.n_pass}/{len(self.cells)} cells "
                f"match ({self.n_fail} failures{extra})")


def load_fixture(table_id: str) -> List[dict]:
    table_id = table_id.lower()
    if table_id not in TABLE_IDS:
        raise KeyError(f"unknown table id {table_id!r}")
    text = resources.files("dosepick.fixtures").joinpath(f"{table_id}.csv").read_text()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _goal(row: dict, need_omega: bool) -> DesignGoal:
    return DesignGoal(
        p_high=float(row["p_high"]),
        delta=float(row["delta"]),
        alpha_low=float(row["alpha_low"]),
        alpha_high=float(row["alpha_high"]),
        ratio=float(row.get("ratio") or 1),
        omega=float(row["omega"]) if need_omega and row.get("omega") else None,
    )


def _coord(row: dict, *extra: str) -> str:
    base = (f"p_high={row['p_high']} delta={row['delta']} "
            f"alpha={row['alpha_low']}/{row['alpha_high']}")
    return " ".join([base, *extra]).strip()


def _cell(table, coord, metric, expected, actual, tol) -> ReproCell:
    full = f"{coord} {metric}"
    anomaly = any(t == table and (coord.startswith(k) or full.startswith(k))
                  for (t, k) in KNOWN_ANOMALIES)
    if abs(actual - expected) <= tol:
        status = "pass"
    elif anomaly:
        status = "anomaly"
    else:
        status = "fail"
    return ReproCell(table, coord, metric, expected, actual, tol, status)


def _design_for_row(row: dict, method: str):
    two = row["stage"] == "two"
    goal = _goal(row, need_omega=two)
    if method == "normal":
        return normal.design_two_stage(goal) if two else normal.design_one_stage(goal)
    cfg = ExactSearchConfig()
    if method == "exact":
        return (exact.design_exact_two_stage(goal, cfg) if two
                else exact.design_exact_one_stage(goal, cfg))
    return exact.design_exact_global_min(goal, cfg)


def _reproduce_designs(table_id: str, method: str) -> ReproReport:
    cells = []
    for row in load_fixture(table_id):
        coord = _coord(row, row["stage"] + "-stage")
        design = _design_for_row(row, method)
        cells.append(_cell(table_id, coord, "lambda", float(row["lambda"]),
                           round(design.lambda_, 3), 5e-4))
        cells.append(_cell(table_id, coord, "n_low", float(row["n_low"]),
                           design.n_low, 0))
        cells.append(_cell(table_id, coord, "n_high", float(row["n_high"]),
                           design.n_high, 0))
        if row["stage"] == "two":
            cells.append(_cell(table_id, coord, "lambda1", float(row["lambda1"]),
                               round(design.lambda1, 3), 5e-4))
            cells.append(_cell(table_id, coord, "n1_low", float(row["n1_low"]),
                               design.n1_low, 0))
            cells.append(_cell(table_id, coord, "n1_high", float(row["n1_high"]),
                               design.n1_high, 0))
    return ReproReport(table_id, cells)


def _published_design(design_table: str, row: dict) -> TwoStageDesign:
    """Two-stage design object built from a published design fixture row."""
    matches = [r for r in load_fixture(design_table)
               if r["stage"] == "two"
               and r["p_high"] == row["p_high"] and r["delta"] == row["delta"]
               and r["alpha_low"] == row["alpha_low"]
               and r["alpha_high"] == row["alpha_high"]]
    (r,) = matches
    goal = _goal(r, need_omega=True)
    return TwoStageDesign(
        lambda1=float(r["lambda1"]), lambda_=float(r["lambda"]),
        n1_low=int(r["n1_low"]), n1_high=int(r["n1_high"]),
        n_low=int(r["n_low"]), n_high=int(r["n_high"]),
        omega=0.5, method=exact.Method.EXACT, goal=goal,
        lambda1_exact=exact.as_boundary(r["lambda1"]),
        lambda_exact=exact.as_boundary(r["lambda"]),
    )


def _published_one_stage(design_table: str, row: dict):
    matches = [r for r in load_fixture(design_table)
               if r["stage"] == "one"
               and r["p_high"] == row["p_high"] and r["delta"] == row["delta"]
               and r["alpha_low"] == row["alpha_low"]
               and r["alpha_high"] == row["alpha_high"]]
    (r,) = matches
    goal = _goal(r, need_omega=False)
    from .types import Method, OneStageDesign
    return OneStageDesign(
        lambda_=float(r["lambda"]), n_low=int(r["n_low"]), n_high=int(r["n_high"]),
        lambda_interval=(0.0, 1.0), achieved_pcs_low=0.5, achieved_pcs_high=0.5,
        method=Method.EXACT, goal=goal, lambda_exact=exact.as_boundary(r["lambda"]),
    )


def _reproduce_exact_oc(table_id: str) -> ReproReport:
    design_table = {"s9": "s7", "s10": "s8", "s11": "s11", "s12": "s11"}[table_id]
    cells = []
    for row in load_fixture(table_id):
        coord = _coord(row)
        p_low = float(row["p_low"])
        p_high = float(row["p_high"])
        if row["stage"] == "one":
            design = _published_one_stage(design_table, row)
        else:
            design = _published_design(design_table, row)
        oc = exact.exact_oc(design, p_low, p_high)
        pcs = oc.pcs_low if p_low == p_high else oc.pcs_high
        cells.append(_cell(table_id, coord, f"pcs@p_low={row['p_low']}",
                           float(row["pcs"]), pcs, 0.005))
        if row["stage"] == "two":
            cells.append(_cell(table_id, coord, f"pet@p_low={row['p_low']}",
                               float(row["pet"]), oc.pet_high, 0.005))
            cells.append(_cell(table_id, coord, f"en@p_low={row['p_low']}",
                               float(row["en"]), oc.en_low, 0.05))
    return ReproReport(table_id, cells)


def _mc_tol(p: float, n_reps: int, pad: float) -> float:
    return 3.0 * math.sqrt(max(p * (1 - p), 1e-12) / n_reps) + pad


def _reproduce_sim(table_id: str, seed: int, n_reps: int) -> ReproReport:
    cells = []
    for row in load_fixture(table_id):
        coord = _coord(row, f"p_low={row['p_low']}", row.get("stage", ""))
        goal_omega = row.get("stage", "two") == "two"
        goal = _goal({**row, "omega": "0.5"}, need_omega=goal_omega)
        p_low, p_high = float(row["p_low"]), float(row["p_high"])
        if table_id == "t3":
            one = normal.design_one_stage(goal)
            cfg = SimConfig(seed=seed, true_p_low=p_low, true_p_high=p_high,
                            n_reps=n_reps)
            res = simulate.simulate_one_stage(one, cfg)
            cells.append(_cell(table_id, coord, "design_pcs", float(row["design_pcs"]),
                               res.pcs, _mc_tol(res.pcs, n_reps, 0.01)))
            ucfg = SimConfig(seed=seed, true_p_low=p_low, true_p_high=p_high,
                             n_reps=n_reps, enrolled_n_low=one.n_low,
                             enrolled_n_high=one.n_high)
            ures = simulate.simulate_umet(ucfg, UMET_TABLE_CONFIG,
                                          delta=goal.delta)
            cells.append(_cell(table_id, f"{coord} umet", "umet_pcs",
                               float(row["umet_pcs"]), ures.pcs,
                               _mc_tol(ures.pcs, n_reps, 0.02)))
            continue
        stage = row.get("stage", "two")
        design = (normal.design_two_stage(goal) if stage == "two"
                  else normal.design_one_stage(_goal(row, need_omega=False)))
        cfg = SimConfig(seed=seed, true_p_low=p_low, true_p_high=p_high,
                        n_reps=n_reps)
        res = simulate.simulate_design(design, cfg)
        cells.append(_cell(table_id, coord, "pcs", float(row["pcs"]), res.pcs,
                           _mc_tol(res.pcs, n_reps, 0.01)))
        if stage == "two" and row.get("pet"):
            cells.append(_cell(table_id, coord, "pet", float(row["pet"]), res.pet,
                               _mc_tol(res.pet, n_reps, 0.01)))
        if stage == "two" and row.get("en"):
            en = res.en
            if row.get("en_kind") == "total":
                en = res.en + design.n1_high + (1 - res.pet) * (design.n_high
                                                                - design.n1_high)
            cells.append(_cell(table_id, coord, "en", float(row["en"]), en, 0.5))
    return ReproReport(table_id, cells)


def reproduce(table_id: str, seed: int = DEFAULT_SEED,
              n_reps: int = 10_000) -> ReproReport:
    """Recompute one published table and compare cell by cell."""
    table_id = table_id.lower()
    if table_id in ("t1", "t2", "s1", "s3", "s4"):
        return _reproduce_designs(table_id, "normal")
    if table_id in ("s7", "s8"):
        return _reproduce_designs(table_id, "exact")
    if table_id == "s11":
        return _reproduce_designs(table_id, "global")
    if table_id in ("s9", "s10", "s12"):
        return _reproduce_exact_oc(table_id)
    if table_id in ("t3", "t4", "s2", "s5", "s6"):
        return _reproduce_sim(table_id, seed, n_reps)
    raise KeyError(f"unknown table id {table_id!r}")


def audit_global_min_divergence(p_high: float = 0.5, delta: float = 0.1,
                                alpha_low: float = 0.8, alpha_high: float = 0.9,
                                published: Tuple[float, float, int] = (0.08, 0.044, 229),
                                ) -> dict:
    """Exhaustive evidence for the one diverging global-minimum cell.

    Returns the feasible boundary pairs at the claimed minimum n, confirms no
    smaller n admits any pair, and evaluates the published pair's exact
    selection probabilities (which violate the constraints).
    """
    goal = DesignGoal(p_high=p_high, delta=delta, alpha_low=alpha_low,
                      alpha_high=alpha_high, omega=0.5)
    cfg = ExactSearchConfig()
    pub_l1, pub_l, pub_n = published
    ours = exact.design_exact_global_min(goal, cfg)
    feasible = [
        {"lambda1": float(l1), "lambda": float(l), "beta_low": bl, "beta_high": bh}
        for l1, l, bl, bh in exact.enumerate_feasible_two_stage(goal, cfg, ours.n_low)
    ]
    smaller = {
        n: len(list(exact.enumerate_feasible_two_stage(goal, cfg, n)))
        for n in range(max(2, ours.n_low - 3), ours.n_low)
    }
    n1 = math.ceil(0.5 * pub_n)
    pub_bl = exact.exact_pi_low_two_stage(p_high, p_high, n1, pub_n - n1,
                                          exact.as_boundary(pub_l1),
                                          exact.as_boundary(pub_l))
    pub_bh = 1.0 - exact.exact_pi_low_two_stage(p_high - delta, p_high, n1,
                                                pub_n - n1,
                                                exact.as_boundary(pub_l1),
                                                exact.as_boundary(pub_l))
    return {
        "goal": {"p_high": p_high, "delta": delta, "alpha_low": alpha_low,
                 "alpha_high": alpha_high, "omega": 0.5},
        "our_design": {"lambda1": ours.lambda1, "n1": ours.n1_low,
                       "lambda": ours.lambda_, "n": ours.n_low},
        "published": {"lambda1": pub_l1, "lambda": pub_l, "n": pub_n},
        "published_beta_low": pub_bl,
        "published_beta_high": pub_bh,
        "published_feasible": (pub_bl >= alpha_low and pub_bh >= alpha_high),
        "feasible_pairs_at_min_n": feasible,
        "feasible_counts_below_min_n": smaller,
    }
