"""HTTP service: endpoint behavior, problem documents, optimistic
concurrency, and the background-job flow."""

import time

import pytest
from fastapi.testclient import TestClient

from dosepick.service import create_app

GOAL = {"p_high": 0.3, "delta": 0.1, "alpha_low": 0.6, "alpha_high": 0.6}
TWO_STAGE = {**GOAL, "omega": 0.5}


@pytest.fixture
def client(tmp_path):
    app = create_app(str(tmp_path))
    with TestClient(app) as c:
        yield c


def make_trial(client, trial_id="tr-1", design=None):
    return client.post("/v1/trials", json={"trial_id": trial_id,
                                           "design": design or TWO_STAGE})


class TestDesignEndpoint:
    def test_published_row(self, client):
        res = client.post("/v1/design", json=GOAL)
        assert res.status_code == 200
        body = res.json()
        assert body["result"]["n_low"] == 11
        assert round(body["result"]["lambda"], 3) == 0.052
        assert body["engine_version"]
        assert body["inputs"]["p_high"] == 0.3

    def test_validation_problem_document(self, client):
        res = client.post("/v1/design", json={**GOAL, "alpha_low": 0.3})
        assert res.status_code == 400
        assert res.headers["content-type"] == "application/problem+json"
        assert res.json()["title"] == "Validation failed"

    def test_infeasible_problem_document(self, client):
        res = client.post("/v1/design", json={**GOAL, "method": "exact",
                                              "n_cap": 5})
        assert res.status_code == 422
        assert res.json()["title"] == "Design infeasible"

    def test_global_min_requires_stage_two(self, client):
        res = client.post("/v1/design", json={**GOAL, "method":
                                              "exact-global-min", "stage": "one"})
        assert res.status_code == 400

    def test_unknown_field_rejected(self, client):
        res = client.post("/v1/design", json={**GOAL, "bogus": 1})
        assert res.status_code == 400


class TestOcEndpoint:
    def test_exact_oc(self, client):
        res = client.post("/v1/oc/exact", json={
            "design": {**TWO_STAGE, "method": "exact"},
            "p_low": 0.2, "p_high": 0.3})
        assert res.status_code == 200
        oc = res.json()["result"]["oc"]
        assert round(oc["pcs_high"], 2) == 0.61
        assert round(oc["pet_high"], 2) == 0.40


class TestSimulateEndpoint:
    def test_requires_seed(self, client):
        res = client.post("/v1/simulate", json={"design": GOAL,
                                                "sim": {"true_p_low": 0.2,
                                                        "true_p_high": 0.3}})
        assert res.status_code == 400
        assert "seed" in res.json()["detail"]

    def test_synchronous_run(self, client):
        res = client.post("/v1/simulate", json={
            "design": GOAL,
            "sim": {"seed": 11, "true_p_low": 0.2, "true_p_high": 0.3,
                    "n_reps": 2000}})
        assert res.status_code == 200
        out = res.json()["result"]["result"]
        assert out["scenario"] == "S_H"
        assert 0.4 < out["pcs"] < 0.9

    def test_job_flow(self, client):
        res = client.post("/v1/simulate", json={
            "design": GOAL,
            "sim": {"seed": 11, "true_p_low": 0.2, "true_p_high": 0.3,
                    "n_reps": 2000},
            "async_job": True})
        assert res.status_code == 202
        job_id = res.json()["result"]["job_id"]
        for _ in range(100):
            poll = client.get(f"/v1/jobs/{job_id}")
            if poll.json()["result"]["status"] == "done":
                break
            time.sleep(0.05)
        final = poll.json()["result"]["result"]["result"]["result"]
        sync = client.post("/v1/simulate", json={
            "design": GOAL,
            "sim": {"seed": 11, "true_p_low": 0.2, "true_p_high": 0.3,
                    "n_reps": 2000}})
        assert final == sync.json()["result"]["result"]

    def test_unknown_job(self, client):
        assert client.get("/v1/jobs/deadbeef").status_code == 404


class TestSensitivityEndpoint:
    def test_p_high_sweep(self, client):
        res = client.post("/v1/sensitivity", json={
            "design": TWO_STAGE, "kind": "p_high", "grid": [0.25, 0.3],
            "sim": {"seed": 5, "true_p_low": 0.3, "true_p_high": 0.3,
                    "n_reps": 500}})
        assert res.status_code == 200
        rows = res.json()["result"]["rows"]
        assert [r["p_high_true"] for r in rows] == [0.25, 0.3]

    def test_n_deviation_sweep(self, client):
        res = client.post("/v1/sensitivity", json={
            "design": GOAL, "kind": "n_deviation",
            "deviation_type": "OppositeDirection", "grid": [-2, 0, 2],
            "sim": {"seed": 5, "true_p_low": 0.3, "true_p_high": 0.3,
                    "n_reps": 500}})
        assert res.status_code == 200
        assert len(res.json()["result"]["rows"]) == 3


class TestTrialEndpoints:
    def test_create_and_fetch(self, client):
        res = make_trial(client)
        assert res.status_code == 201
        doc = client.get("/v1/trials/tr-1").json()["result"]
        assert doc["status"] == "Enrolling"
        assert doc["design"]["n_low"] == 13

    def test_duplicate_create_conflicts(self, client):
        make_trial(client)
        assert make_trial(client).status_code == 409

    def test_unknown_trial_404(self, client):
        assert client.get("/v1/trials/ghost").status_code == 404

    def test_decision_before_data_conflicts(self, client):
        make_trial(client)
        res = client.post("/v1/trials/tr-1/decision",
                          json={"analysis": "interim"})
        assert res.status_code == 409

    def test_version_conflict(self, client):
        make_trial(client)
        res = client.post("/v1/trials/tr-1/responses", json={
            "stage": 1, "arm": "low", "enrolled_delta": 3,
            "responses_delta": 1, "version": 99})
        assert res.status_code == 409

    def test_full_flow_with_early_stop(self, client):
        make_trial(client)
        for arm, resp in (("low", 1), ("high", 4)):
            r = client.post("/v1/trials/tr-1/responses", json={
                "stage": 1, "arm": arm, "enrolled_delta": 7,
                "responses_delta": resp})
            assert r.status_code == 200
        res = client.post("/v1/trials/tr-1/decision",
                          json={"analysis": "interim"})
        assert res.status_code == 200
        body = res.json()["result"]
        assert body["decision"]["kind"] == "SelectHigh"
        assert body["trial"]["status"] == "Closed"

    def test_forced_decision_on_partial_data(self, client):
        make_trial(client)
        for arm, resp in (("low", 3), ("high", 3)):
            client.post("/v1/trials/tr-1/responses", json={
                "stage": 1, "arm": arm, "enrolled_delta": 5,
                "responses_delta": resp})
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = client.post("/v1/trials/tr-1/decision",
                              json={"analysis": "final", "force": True})
        assert res.status_code == 200
        assert res.json()["result"]["decision"]["kind"] == "SelectLow"

    def test_invariant_violation_rejected(self, client):
        make_trial(client)
        res = client.post("/v1/trials/tr-1/responses", json={
            "stage": 1, "arm": "low", "enrolled_delta": 1,
            "responses_delta": 5})
        assert res.status_code == 400
