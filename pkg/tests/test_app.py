import base64

import pytest
from fastapi.testclient import TestClient

from app import app
from constants import CONSTANT_HEADER, EXPECTED_HEADER, VERSION
from utils.common import canonical_json


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_version(client):
    response = client.get("/api/v1/version")
    assert response.status_code == 200
    assert response.json() == {"version": VERSION}


def test_asymptote_constants(client):
    response = client.post("/api/v1/asymptote", json={"alpha": [0.5]})
    assert response.status_code == 200
    payload = response.json()
    assert payload["header"] == CONSTANT_HEADER
    assert payload["rows"][0][1] == pytest.approx(0.1426990817, abs=1e-10)
    assert payload["meta"]["version"] == VERSION


def test_domain_errors_map_to_422(client):
    assert client.post("/api/v1/asymptote", json={"alpha": [1.5]}).status_code == 422
    response = client.post("/api/v1/expected", json={"n": [5], "m": 2, "model": "li-wei"})
    assert response.status_code == 422
    assert "li-wei" in response.json()["detail"]


def test_request_validation(client):
    assert client.post("/api/v1/montecarlo", json={"n": 1, "m": 1, "trials": 0}).status_code == 422


def test_expected(client):
    payload = client.post("/api/v1/expected", json={"n": [5], "m": 0}).json()
    assert payload["header"] == EXPECTED_HEADER
    assert payload["rows"][0][3] == pytest.approx(5.0, rel=1e-6)


def test_density(client):
    payload = client.post("/api/v1/density", json={"n": 10, "m": 5, "r_grid": [1.0, 0.5]}).json()
    assert [row[0] for row in payload["rows"]] == [0.5, 1.0]


def test_montecarlo_is_deterministic(client):
    body = {"n": 1, "m": 1, "trials": 3, "seed": 1}
    first = client.post("/api/v1/montecarlo", json=body).json()
    second = client.post("/api/v1/montecarlo", json=body).json()
    assert first["mean"] == 1.0 and first["valid"]
    assert canonical_json(first) == canonical_json(second)


def test_sample(client):
    payload = client.post("/api/v1/sample", json={"n": 3, "m": 1, "stream": 2}).json()
    assert len(payload["a"]) == 4 and len(payload["b"]) == 2
    assert payload["zeros"]["winding"] == 3


def test_lemniscate_image(client):
    body = {"n": 3, "m": 3, "window": {"resolution": 64}, "image": True}
    payload = client.post("/api/v1/lemniscate", json=body).json()
    assert payload["window"]["resolution"] == 64
    assert base64.b64decode(payload["image"]).startswith(b"\x89PNG")
