import json
import random

import pytest
from fastapi.testclient import TestClient

from amprint.scoring import config_from_dict, overall_printability
from amprint.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def woman_doc():
    return {
        "technology": "BJ",
        "application": {"name": "art", "k": 0.9},
        "qs": 1.0,
        "characteristics": [
            {"kind": "thin_part", "dimensions": {"thickness": 1.5},
             "epsilon": 0.18, "significance": 1.0}
        ],
    }


def random_config(rng: random.Random) -> dict:
    tech = rng.choice(["FDM", "BJ", "MJ"])
    kinds = {
        "FDM": ["hole", "pin", "supported_wall", "unsupported_wall", "bridge",
                "thin_part", "overhang", "embossed", "engraved"],
        "BJ": ["hole", "pin", "supported_wall", "unsupported_wall", "thin_part",
               "overhang", "embossed", "engraved"],
        "MJ": ["hole", "pin", "supported_wall", "unsupported_wall", "thin_part",
               "embossed", "engraved"],
    }[tech]
    dims_by_kind = {
        "hole": {"diameter"}, "pin": {"diameter"},
        "supported_wall": {"thickness"}, "unsupported_wall": {"thickness"},
        "thin_part": {"thickness"}, "bridge": {"length"},
        "embossed": {"width", "height"}, "engraved": {"width", "depth"},
    }
    chars = []
    for _ in range(rng.randint(0, 5)):
        kind = rng.choice(kinds)
        if kind == "overhang":
            dims = ({"stress": rng.uniform(1e3, 6e4)} if tech == "BJ"
                    else {"angle": rng.uniform(5.0, 85.0)})
        else:
            dims = {d: round(rng.uniform(0.2, 12.0), 3) for d in dims_by_kind[kind]}
        chars.append({
            "kind": kind,
            "dimensions": dims,
            "epsilon": 0.0 if kind == "overhang" else round(rng.uniform(0.0, 0.3), 4),
            "significance": round(rng.uniform(0.05, 1.0), 3),
        })
    return {
        "technology": tech,
        "application": {"name": "fuzz", "k": round(rng.uniform(0.0, 1.0), 3)},
        "qs": round(rng.uniform(0.8, 1.0), 4),
        "characteristics": chars,
    }


def test_health(client):
    r = client.get("/api/v1/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"
    assert client.get("/api/v1/healthz").status_code == 404


def test_score_woman_of_pindos(client):
    r = client.post("/api/v1/score", json=woman_doc())
    assert r.status_code == 200
    doc = r.json()
    assert doc["overall"] == pytest.approx(0.2738, abs=0.05)
    assert doc["characteristics"][0]["survival"] == pytest.approx(0.300, abs=0.05)


def test_score_empty_insensitive_config_is_one(client):
    r = client.post("/api/v1/score", json={
        "technology": "BJ", "application": {"name": "x", "k": 0.0},
        "characteristics": [],
    })
    assert r.status_code == 200
    assert r.json()["overall"] == 1.0


def test_score_benchmark3_survival(client):
    # benchmark-scale config: every decreasing dimension far above critical
    doc = {
        "technology": "BJ", "application": {"name": "bench", "k": 0.1}, "qs": 1.0,
        "characteristics": [
            {"kind": "hole", "dimensions": {"diameter": 5.5}, "epsilon": 0.11897},
            {"kind": "hole", "dimensions": {"diameter": 6.5}, "epsilon": 0.11897},
            {"kind": "pin", "dimensions": {"diameter": 6.5}, "epsilon": 0.11897},
            {"kind": "pin", "dimensions": {"diameter": 7.5}, "epsilon": 0.11897},
            {"kind": "unsupported_wall", "dimensions": {"thickness": 9.5}, "epsilon": 0.11897},
            {"kind": "unsupported_wall", "dimensions": {"thickness": 8.5}, "epsilon": 0.11897},
            {"kind": "supported_wall", "dimensions": {"thickness": 6.5}, "epsilon": 0.11897},
            {"kind": "supported_wall", "dimensions": {"thickness": 7.5}, "epsilon": 0.11897},
            {"kind": "embossed", "dimensions": {"width": 3.5, "height": 3.5}, "epsilon": 0.11897},
            {"kind": "embossed", "dimensions": {"width": 4.5, "height": 4.5}, "epsilon": 0.11897},
            {"kind": "engraved", "dimensions": {"width": 3.5, "depth": 3.5}, "epsilon": 0.11897},
            {"kind": "engraved", "dimensions": {"width": 4.5, "depth": 4.5}, "epsilon": 0.11897},
            {"kind": "thin_part", "dimensions": {"thickness": 6.5}, "epsilon": 0.11897},
            {"kind": "thin_part", "dimensions": {"thickness": 7.5}, "epsilon": 0.11897},
            {"kind": "overhang", "dimensions": {"stress": 1.5276e4}},
        ],
    }
    r = client.post("/api/v1/score", json=doc)
    assert r.status_code == 200
    assert r.json()["overall"] == pytest.approx(0.71828, abs=0.02)


def test_malformed_json_is_400(client):
    r = client.post("/api/v1/score", content=b"{oops",
                    headers={"content-type": "application/json"})
    assert r.status_code == 400
    assert r.json()["code"] == "malformed_json"


def test_invalid_config_is_422_with_field_path(client):
    doc = woman_doc()
    doc["characteristics"][0]["dimensions"]["thickness"] = -2.0
    r = client.post("/api/v1/score", json=doc)
    assert r.status_code == 422
    assert "characteristics[0]" in r.json()["message"]


def test_unsupported_characteristic_is_422_with_kind(client):
    doc = woman_doc()
    doc["characteristics"] = [{"kind": "bridge", "dimensions": {"length": 5.0}}]
    r = client.post("/api/v1/score", json=doc)
    assert r.status_code == 422
    body = r.json()
    assert body["code"] == "unsupported_characteristic"
    assert body["kind"] == "bridge"


HOSTILE_DOCS = [
    {"technology": "BJ", "application": {"k": {"accuracy": "high"}}},
    {"technology": "BJ", "qs": "one"},
    {"technology": "BJ", "areas": "big"},
    {"technology": "BJ", "areas": {"mesh": "x", "cad": 1}},
    {"technology": "BJ", "characteristics": "none"},
    {"technology": "BJ",
     "characteristics": [{"kind": "hole", "dimensions": {"diameter": "wide"}}]},
    {"technology": "BJ", "characteristics": [{"kind": "hole", "dimensions": None}]},
    {"technology": "BJ", "application": 42},
    {"technology": None},
    [1, 2, 3],
    "just a string",
    {"technology": "BJ", "schema_version": "banana"},
    {"technology": "BJ", "global_characteristics": ["accuracy", "mystery"], "k": 0.5},
]


@pytest.mark.parametrize("doc", HOSTILE_DOCS, ids=range(len(HOSTILE_DOCS)))
def test_hostile_config_shapes_are_422(client, doc):
    r = client.post("/api/v1/score", json=doc)
    assert r.status_code == 422
    assert "message" in r.json()


def test_json_infinity_dimension_is_422(client):
    # 1e309 is legal JSON text and parses to float('inf') server-side
    raw = (b'{"technology": "BJ", "characteristics": '
           b'[{"kind": "hole", "dimensions": {"diameter": 1e309}}]}')
    r = client.post("/api/v1/score", content=raw,
                    headers={"content-type": "application/json"})
    assert r.status_code == 422


def test_critical_values_tables(client):
    r = client.get("/api/v1/critical-values/BJ")
    assert r.status_code == 200
    table = r.json()["characteristics"]
    assert table["hole"]["dimensions"]["diameter"]["value"] == 1.5
    assert table["pin"]["dimensions"]["diameter"]["value"] == 2.0
    assert table["unsupported_wall"]["dimensions"]["thickness"]["value"] == 3.0

    r = client.get("/api/v1/critical-values/FDM")
    bridge = r.json()["characteristics"]["bridge"]
    assert bridge["dimensions"]["length"]["value"] == 10.0
    assert bridge["direction"] == "increasing"

    assert client.get("/api/v1/critical-values/XYZ").status_code == 404


def test_fit_c_endpoint(client):
    r = client.post("/api/v1/fit-c", json={"w": 2.0, "direction": "decreasing"})
    assert r.status_code == 200
    assert r.json()["c"] == pytest.approx(1.246, abs=0.01)
    assert client.post("/api/v1/fit-c", json={"w": -1.0}).status_code == 422
    assert client.post("/api/v1/fit-c", json={}).status_code == 422


def test_statelessness_under_permutation(client):
    rng = random.Random(99)
    docs = [random_config(rng) for _ in range(12)]
    first = [client.post("/api/v1/score", json=d).json() for d in docs]
    order = list(range(len(docs)))
    rng.shuffle(order)
    for i in order:
        again = client.post("/api/v1/score", json=docs[i]).json()
        assert again == first[i]


def test_service_matches_library_engine(client):
    rng = random.Random(7)
    for _ in range(20):
        doc = random_config(rng)
        via_http = client.post("/api/v1/score", json=doc)
        assert via_http.status_code == 200, via_http.text
        via_lib = overall_printability(config_from_dict(doc)).to_dict()
        assert json.loads(json.dumps(via_lib)) == via_http.json()
