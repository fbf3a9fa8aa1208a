import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app

Q_FUNCTION = {"kind": "observable", "preset": "q_function"}
VACUUM = {"kind": "state", "preset": "vacuum"}


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def _problem(tasks, entities=None):
    return {"version": "1.0", "entities": entities or {}, "tasks": tasks}


class TestHealth:
    def test_health(self, client):
        response = client.get("/api/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["problem_versions"] == ["1.0"]

    def test_root_points_to_docs(self, client):
        assert client.get("/").json()["docs_url"] == "/api/docs"

    def test_routers_are_mounted(self):
        paths = {route.path for route in app.routes}
        assert {"/api/problems/run", "/api/observables/classify", "/api/observables/pushforward"} <= paths


class TestRunProblem:
    def test_classify(self, client):
        problem = _problem([{"op": "classify", "args": {"observable": "q"}}], {"q": Q_FUNCTION})
        response = client.post("/api/problems/run", json=problem)
        assert response.status_code == 200
        assert response.json()["tasks"][0]["outputs"]["ic"] is True

    def test_body_is_canonical(self, client):
        problem = _problem([{"op": "omega", "args": {"n_modes": 1}}])
        first = client.post("/api/problems/run", json=problem, params={"seed": 3})
        second = client.post("/api/problems/run", json=problem, params={"seed": 3})
        assert first.content == second.content

    def test_undefined_reference(self, client):
        problem = _problem([{"op": "classify", "args": {"observable": "nowhere"}}])
        assert client.post("/api/problems/run", json=problem).status_code == 422

    def test_unphysical_entity_is_unprocessable(self, client):
        state = {"kind": "state", "m": [0.0, 0.0], "v": [[0.5, 0.0], [0.0, 0.5]]}
        tasks = [{"op": "pushforward", "args": {"observable": "q", "state": "s"}}]
        problem = _problem(tasks, {"q": Q_FUNCTION, "s": state})
        assert client.post("/api/problems/run", json=problem).status_code == 422

    def test_malformed_problem(self, client):
        assert client.post("/api/problems/run", json={"version": "1.0", "tasks": []}).status_code == 422

    def test_task_failure_returns_partial_report(self, client):
        problem = _problem([
            {"op": "omega", "args": {"n_modes": 1}},
            {"op": "decompose-covariant", "args": {"observable": {"kind": "observable", "preset": "quadrature"}}},
        ])
        response = client.post("/api/problems/run", json=problem)
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail["task_index"] == 1
        assert detail["op"] == "decompose-covariant"
        assert detail["report"]["status"] == "failed"
        assert len(detail["report"]["tasks"]) == 2

    def test_op_filter(self, client):
        problem = _problem(
            [{"op": "omega", "args": {"n_modes": 1}}, {"op": "classify", "args": {"observable": "q"}}],
            {"q": Q_FUNCTION},
        )
        response = client.post("/api/problems/run", json=problem, params={"op": "omega"})
        assert [task["op"] for task in response.json()["tasks"]] == ["omega"]

    def test_rejects_nonpositive_tolerance(self, client):
        problem = _problem([{"op": "omega", "args": {"n_modes": 1}}])
        assert client.post("/api/problems/run", json=problem, params={"tol": 0}).status_code == 422


class TestObservables:
    def test_validate_q_function(self, client):
        response = client.post("/api/observables/validate", json=Q_FUNCTION)
        assert response.status_code == 200
        assert response.json()["valid"] is True

    def test_validate_rejects_noiseless_q_function(self, client):
        # A0 = −Ω with B0 = 0 violates the positivity condition
        observable = {"kind": "observable", "a0": [[0.0, -1.0], [1.0, 0.0]], "b0": [[0.0, 0.0], [0.0, 0.0]]}
        response = client.post("/api/observables/validate", json=observable)
        assert response.status_code == 200
        body = response.json()
        assert body["valid"] is False
        assert body["min_eigenvalue"] < 0

    def test_classify_quadrature(self, client):
        response = client.post("/api/observables/classify", json={"kind": "observable", "preset": "quadrature"})
        assert response.json() == {"commutative": True, "sharp": True, "covariant": False, "ic": False}

    def test_shape_error_is_bad_request(self, client):
        observable = {"kind": "observable", "a0": [[1.0, 0.0, 0.0]], "b0": [[1.0]]}
        assert client.post("/api/observables/classify", json=observable).status_code == 400

    def test_pushforward_of_vacuum(self, client):
        response = client.post("/api/observables/pushforward", json={"observable": Q_FUNCTION, "state": VACUUM})
        assert response.status_code == 200
        body = response.json()
        assert body["mean"] == pytest.approx([0.0, 0.0])
        # vacuum Q-function: Σ = ½(I + I)
        np.testing.assert_allclose(body["cov"], np.eye(2), atol=1e-12)

    def test_unphysical_state_reports_eigenvalue(self, client):
        state = {"kind": "state", "m": [0.0, 0.0], "v": [[0.5, 0.0], [0.0, 0.5]]}
        response = client.post("/api/observables/pushforward", json={"observable": Q_FUNCTION, "state": state})
        assert response.status_code == 400
        body = response.json()
        assert body["error"] == "InvalidStateError"
        assert body["min_eigenvalue"] < 0
