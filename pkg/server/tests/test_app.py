from __future__ import annotations

import math
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from victim_server.app import create_app
from victim_server.config import ServerConfig

EXAMPLES = Path(__file__).parent.parent / "examples"


@pytest.fixture(scope="module")
def client(full_config):
    with TestClient(create_app(full_config)) as c:
        yield c


class TestHealth:
    def test_reports_status_labels_and_model_info(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["labels"] == 2
        assert body["classifier"]["kind"] == "fixture-linear-bag"
        assert body["translator"]["decoding"] == {"strategy": "dictionary-lookup"}
        assert body["max_batch_size"] == 2

    def test_translator_only_server_reports_zero_labels(self):
        config = ServerConfig(translator=f"fixture:{EXAMPLES / 'translator.json'}")
        with TestClient(create_app(config)) as client:
            body = client.get("/health").json()
            assert body["labels"] == 0
            assert body["classifier"] is None


class TestPredict:
    def test_rows_aligned_and_normalized(self, client):
        texts = ["the ball and the goal", "they vote on the law", "nothing special"]
        response = client.post("/predict", json={"texts": texts})
        assert response.status_code == 200
        body = response.json()
        assert len(body["probs"]) == 3
        for row in body["probs"]:
            assert len(row) == 2
            assert abs(math.fsum(row) - 1.0) <= 1e-6
        assert body["truncated"] == [False, False, False]

    def test_identical_texts_identical_rows(self, client):
        body = client.post("/predict", json={"texts": ["same ball text", "same ball text"]}).json()
        assert body["probs"][0] == body["probs"][1]

    def test_batch_larger_than_max_batch_size(self, client):
        texts = [f"text number {i}" for i in range(7)]  # max_batch_size is 2
        body = client.post("/predict", json={"texts": texts}).json()
        assert len(body["probs"]) == 7

    def test_overlong_input_flagged(self, client):
        body = client.post("/predict", json={"texts": ["ball " * 40]}).json()
        assert body["truncated"] == [True]

    @pytest.mark.parametrize(
        "payload",
        [
            {"texts": "not a list"},
            {"inputs": ["x"]},
            {"texts": []},
            {"texts": [42]},
        ],
    )
    def test_malformed_requests_get_400_with_error(self, client, payload):
        response = client.post("/predict", json=payload)
        assert response.status_code == 400
        assert response.json()["error"]

    def test_invalid_json_body(self, client):
        response = client.post(
            "/predict", content=b"{not json", headers={"Content-Type": "application/json"}
        )
        assert response.status_code == 400
        assert "JSON" in response.json()["error"]

    def test_predict_without_classifier_is_400(self):
        config = ServerConfig(translator=f"fixture:{EXAMPLES / 'translator.json'}")
        with TestClient(create_app(config)) as client:
            response = client.post("/predict", json={"texts": ["x"]})
            assert response.status_code == 400
            assert "classifier" in response.json()["error"]


class TestTranslate:
    def test_word_mapping_applied(self, client):
        response = client.post(
            "/translate",
            json={"texts": ["hello world"], "src": "eng_Latn", "tgt": "zul_Latn"},
        )
        assert response.status_code == 200
        assert response.json()["texts"] == ["sawubona umhlaba"]

    def test_alignment_over_batches(self, client):
        texts = ["hello", "world", "goal", "vote", "plain"]
        body = client.post(
            "/translate", json={"texts": texts, "src": "eng_Latn", "tgt": "zul_Latn"}
        ).json()
        assert body["texts"] == ["sawubona", "umhlaba", "umgomo", "ivoti", "plain"]

    def test_same_source_and_target_flagged_passthrough(self, client):
        body = client.post(
            "/translate", json={"texts": ["as is"], "src": "eng_Latn", "tgt": "eng_Latn"}
        ).json()
        assert body == {"texts": ["as is"], "passthrough": True}

    def test_unsupported_code_names_the_code(self, client):
        response = client.post(
            "/translate", json={"texts": ["x"], "src": "xx_Nope", "tgt": "zul_Latn"}
        )
        assert response.status_code == 400
        assert "xx_Nope" in response.json()["error"]

    def test_missing_src_is_400(self, client):
        response = client.post("/translate", json={"texts": ["x"], "tgt": "zul_Latn"})
        assert response.status_code == 400

    def test_empty_string_member_is_translated(self, client):
        body = client.post(
            "/translate", json={"texts": [""], "src": "eng_Latn", "tgt": "zul_Latn"}
        ).json()
        assert body["texts"] == [""]


@pytest.fixture(scope="module")
def secured():
    config = ServerConfig(
        classifier=f"fixture:{EXAMPLES / 'classifier.json'}", token="sesame"
    )
    with TestClient(create_app(config)) as client:
        yield client


class TestAuth:
    def test_missing_token_rejected(self, secured):
        response = secured.post("/predict", json={"texts": ["x"]})
        assert response.status_code == 401
        assert response.json()["error"]

    def test_wrong_token_rejected(self, secured):
        response = secured.post(
            "/predict", json={"texts": ["x"]}, headers={"Authorization": "Bearer wrong"}
        )
        assert response.status_code == 401

    def test_correct_token_accepted(self, secured):
        response = secured.post(
            "/predict", json={"texts": ["x"]}, headers={"Authorization": "Bearer sesame"}
        )
        assert response.status_code == 200
