"""Trial-conduct engine: decision rules on observed counts, state updates,
the append-only log, and the versioned JSON store."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dosepick import normal
from dosepick.conduct import (
    Arm,
    TrialStatus,
    TrialStore,
    decide_final,
    decide_interim,
    new_trial,
    record_decision,
    record_responses,
    replay_decisions,
    state_document,
    state_from_document,
)
from dosepick.errors import (
    InsufficientDataError,
    NotApplicableError,
    UnknownTrialError,
    ValidationError,
    VersionConflictError,
)
from dosepick.types import DecisionKind, DesignGoal, Method, TwoStageDesign

ONE = normal.design_one_stage(
    DesignGoal(p_high=0.3, delta=0.1, alpha_low=0.6, alpha_high=0.6))
TWO = normal.design_two_stage(
    DesignGoal(p_high=0.3, delta=0.1, alpha_low=0.6, alpha_high=0.6, omega=0.5))


def one_stage_trial(r_low, r_high, n=11):
    state = new_trial("t1", ONE)
    state = record_responses(state, 1, Arm.LOW, n, r_low)
    return record_responses(state, 1, Arm.HIGH, n, r_high)


def two_stage_trial(r1_low, r1_high, n1=7):
    state = new_trial("t2", TWO)
    state = record_responses(state, 1, Arm.LOW, n1, r1_low)
    return record_responses(state, 1, Arm.HIGH, n1, r1_high)


class TestDecideFinal:
    def test_equal_rates_select_low(self):
        d = decide_final(one_stage_trial(4, 4))
        assert d.kind is DecisionKind.SELECT_LOW
        assert d.observed_diff == 0.0

    def test_clear_gap_selects_high(self):
        # 5/11 - 3/11 = 0.1818 > 0.052
        d = decide_final(one_stage_trial(3, 5))
        assert d.kind is DecisionKind.SELECT_HIGH

    def test_tie_with_boundary_selects_low(self):
        # an exactly-attained boundary goes to the low dose (non-strict rule)
        goal = DesignGoal(p_high=0.3, delta=0.2, alpha_low=0.6, alpha_high=0.6,
                          omega=0.5)
        design = TwoStageDesign(lambda1=0.2, lambda_=0.1, n1_low=10, n1_high=10,
                                n_low=20, n_high=20, omega=0.5,
                                method=Method.NORMAL_APPROX, goal=goal)
        state = new_trial("tie", design)
        state = record_responses(state, 1, Arm.LOW, 10, 2)
        state = record_responses(state, 1, Arm.HIGH, 10, 3)
        state = record_responses(state, 2, Arm.LOW, 10, 2)
        state = record_responses(state, 2, Arm.HIGH, 10, 3)
        # pooled diff = 6/20 - 4/20 = 0.1 == boundary
        d = decide_final(state)
        assert d.kind is DecisionKind.SELECT_LOW

    def test_pooled_counts_used(self):
        state = two_stage_trial(2, 3)
        state = record_responses(state, 2, Arm.LOW, 6, 1)
        state = record_responses(state, 2, Arm.HIGH, 6, 4)
        d = decide_final(state)
        # pooled: high 7/13, low 3/13 -> diff 4/13 > 0.074
        assert d.kind is DecisionKind.SELECT_HIGH
        assert d.observed_diff == pytest.approx(4 / 13)

    def test_zero_enrollment_rejected(self):
        state = new_trial("t", ONE)
        state = record_responses(state, 1, Arm.LOW, 11, 2)
        with pytest.raises(InsufficientDataError):
            decide_final(state)

    def test_off_plan_warns_but_decides(self):
        state = one_stage_trial(2, 4, n=9)
        with pytest.warns(UserWarning, match="differs from plan"):
            d = decide_final(state)
        assert d.kind is DecisionKind.SELECT_HIGH


class TestDecideInterim:
    def test_early_stop(self):
        # 4/7 - 1/7 = 3/7 = 0.4286 > 0.178
        d = decide_interim(two_stage_trial(1, 4))
        assert d.kind is DecisionKind.SELECT_HIGH

    def test_equal_counts_continue(self):
        d = decide_interim(two_stage_trial(3, 3))
        assert d.kind is DecisionKind.CONTINUE

    def test_below_boundary_continues(self):
        # 3/7 - 2/7 = 0.1429 <= 0.178
        d = decide_interim(two_stage_trial(2, 3))
        assert d.kind is DecisionKind.CONTINUE

    def test_exact_boundary_continues(self):
        # diff exactly at the interim boundary is not a strict crossing
        goal = DesignGoal(p_high=0.3, delta=0.2, alpha_low=0.6, alpha_high=0.6,
                          omega=0.5)
        design = TwoStageDesign(lambda1=0.2, lambda_=0.1, n1_low=10, n1_high=10,
                                n_low=20, n_high=20, omega=0.5,
                                method=Method.NORMAL_APPROX, goal=goal)
        state = new_trial("tie", design)
        state = record_responses(state, 1, Arm.LOW, 10, 1)
        state = record_responses(state, 1, Arm.HIGH, 10, 3)
        d = decide_interim(state)  # diff = 2/10 == 0.2
        assert d.kind is DecisionKind.CONTINUE

    def test_one_stage_not_applicable(self):
        with pytest.raises(NotApplicableError):
            decide_interim(one_stage_trial(2, 3))

    def test_never_selects_low_early(self):
        # overwhelming evidence for the low dose still only continues
        d = decide_interim(two_stage_trial(7, 0))
        assert d.kind is DecisionKind.CONTINUE


class TestRecordResponses:
    def test_zero_delta_is_identity(self):
        state = two_stage_trial(2, 3)
        assert record_responses(state, 1, Arm.LOW, 0, 0) == state

    def test_invariant_violation_rejected(self):
        state = new_trial("t", ONE)
        with pytest.raises(ValidationError):
            record_responses(state, 1, Arm.LOW, 2, 3)
        # original state untouched
        assert state.stage1.low.enrolled == 0

    def test_stage2_on_one_stage_rejected(self):
        with pytest.raises(NotApplicableError):
            record_responses(new_trial("t", ONE), 2, Arm.LOW, 1, 0)

    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=8))
    def test_sequential_adds_equal_one_batch(self, deltas):
        deltas = [(e, min(e, r)) for e, r in deltas]
        seq = new_trial("t", TWO)
        for e, r in deltas:
            seq = record_responses(seq, 1, Arm.HIGH, e, r)
        batch = record_responses(new_trial("t", TWO), 1, Arm.HIGH,
                                 sum(e for e, _ in deltas),
                                 sum(r for _, r in deltas))
        assert seq.stage1 == batch.stage1


class TestLogAndStatus:
    def test_log_append_and_status_transition(self):
        state = two_stage_trial(3, 3)
        d = decide_interim(state)
        state = record_decision(state, d, "interim")
        assert state.status is TrialStatus.INTERIM_DONE
        assert len(state.decision_log) == 1
        state = record_responses(state, 2, Arm.LOW, 6, 2)
        state = record_responses(state, 2, Arm.HIGH, 6, 3)
        final = decide_final(state)
        state = record_decision(state, final, "final")
        assert state.status is TrialStatus.CLOSED
        assert [e.decision.kind for e in state.decision_log] == \
            [DecisionKind.CONTINUE, final.kind]

    def test_replay_reproduces_state(self):
        state = two_stage_trial(3, 3)
        state = record_decision(state, decide_interim(state), "interim")
        state = record_responses(state, 2, Arm.LOW, 6, 2)
        state = record_responses(state, 2, Arm.HIGH, 6, 3)
        state = record_decision(state, decide_final(state), "final")
        assert replay_decisions(state) == state

    def test_closed_trial_rejects_new_counts(self):
        state = one_stage_trial(4, 4)
        state = record_decision(state, decide_final(state), "final")
        with pytest.raises(ValidationError):
            record_responses(state, 1, Arm.LOW, 1, 0)


class TestStore:
    def test_roundtrip(self, tmp_path):
        store = TrialStore(tmp_path)
        state = store.save(two_stage_trial(2, 3))
        loaded = store.load("t2")
        assert loaded == state
        assert loaded.version == 1

    def test_document_schema(self, tmp_path):
        store = TrialStore(tmp_path)
        store.save(one_stage_trial(1, 2))
        doc = json.loads((tmp_path / "t1.json").read_text())
        assert doc["schema"] == "dosepick/trial-state@1"
        assert doc["version"] == 1
        assert state_from_document(doc).trial_id == "t1"

    def test_version_conflict_detected(self, tmp_path):
        store = TrialStore(tmp_path)
        saved = store.save(two_stage_trial(2, 3))
        # a second writer updates the same trial first
        other = record_responses(saved, 1, Arm.LOW, 0, 0)
        store.save(other)
        with pytest.raises(VersionConflictError):
            store.save(record_responses(saved, 2, Arm.LOW, 1, 0))

    def test_unknown_trial(self, tmp_path):
        with pytest.raises(UnknownTrialError):
            TrialStore(tmp_path).load("missing")

    def test_decision_timestamps_are_utc(self, tmp_path):
        state = one_stage_trial(4, 4)
        state = record_decision(state, decide_final(state), "final")
        entry = state.decision_log[0]
        assert entry.timestamp.endswith("+00:00")
        doc = state_document(state)
        assert doc["decision_log"][0]["inputs"]["analysis"] == "final"

    def test_exact_boundary_survives_persistence(self, tmp_path):
        # grid boundaries are exact decimals; the float that survives the
        # JSON round trip reads back to the same rational, so persisted
        # trials decide boundary ties identically
        from dosepick import exact
        from dosepick.types import DesignGoal

        design = exact.design_exact_two_stage(DesignGoal(
            p_high=0.3, delta=0.1, alpha_low=0.75, alpha_high=0.75, omega=0.5))
        store = TrialStore(tmp_path)
        state = store.save(new_trial("roundtrip", design))
        loaded = store.load("roundtrip")
        # lambda = 0.05 with n = 80: a count gap of 4 sits exactly on it
        assert design.lambda_ == 0.05 and design.n_low == 80
        assert exact.as_boundary(loaded.design.lambda_) == design.lambda_exact
        for arm, resp in ((Arm.LOW, 10), (Arm.HIGH, 11)):
            loaded = record_responses(loaded, 1, arm, 40, resp)
        for arm, resp in ((Arm.LOW, 10), (Arm.HIGH, 13)):
            loaded = record_responses(loaded, 2, arm, 40, resp)
        # pooled difference 4/80 equals the boundary exactly: ties go low
        assert decide_final(loaded).kind is DecisionKind.SELECT_LOW
