import hashlib

import pytest
from fastapi.testclient import TestClient

from soundsight.schemes import scheme_to_text
from soundsight.service import ServiceConfig, create_app, load_config


def agent_label(options, stimulus_id):
    digest = hashlib.sha256(stimulus_id.encode()).digest()
    return options[digest[0] % len(options)]


def drive_http(client, session_id):
    """Run a session to completion; checks testing-phase blinding on the way."""
    while True:
        r = client.get(f"/sessions/{session_id}/next")
        if r.status_code == 409:
            assert r.json()["code"] == "session_complete"
            return
        assert r.status_code == 200
        trial = r.json()
        if trial["phase"] == "testing":
            assert trial["expects_answer"] is True
            assert trial["reveal_after"] is False
            assert len(trial["options"]) == 10
        if trial["expects_answer"]:
            a = client.post(
                f"/sessions/{session_id}/answers",
                json={
                    "stimulus_id": trial["stimulus_id"],
                    "label": agent_label(trial["options"], trial["stimulus_id"]),
                },
            )
            assert a.status_code == 200
            assert set(a.json().keys()) == {"acknowledged", "progress"}


@pytest.fixture(scope="module")
def config(tmp_path_factory):
    return ServiceConfig(data_dir=tmp_path_factory.mktemp("svc") / "data", corpus_size=32)


@pytest.fixture(scope="module")
def client(config):
    return TestClient(create_app(config))


@pytest.fixture(scope="module")
def completed_session(client):
    r = client.post("/sessions", json={"scheme": "primary", "seed": 11})
    session_id = r.json()["session_id"]
    drive_http(client, session_id)
    return session_id


class TestSessionEndpoints:
    def test_create_session(self, client):
        r = client.post("/sessions", json={"scheme": "primary", "seed": 0})
        assert r.status_code == 201
        assert isinstance(r.json()["session_id"], str)
        listed = client.get("/sessions").json()["sessions"]
        assert r.json()["session_id"] in listed

    def test_create_unknown_scheme(self, client):
        r = client.post("/sessions", json={"scheme": "nope"})
        assert r.status_code == 404
        assert r.json() == {"code": "scheme_not_found", "message": "no scheme 'nope'"}

    def test_next_descriptor_shape(self, client):
        session_id = client.post("/sessions", json={"scheme": "primary", "seed": 1}).json()[
            "session_id"
        ]
        trial = client.get(f"/sessions/{session_id}/next").json()
        assert trial["phase"] == "lesson1"
        assert trial["expects_answer"] is False
        assert trial["reveal_after"] is True
        assert trial["audio_url"] == f"/audio/{trial['stimulus_id']}?scheme=primary"
        assert trial["options"] == ["circle", "triangle", "square"]
        progress = trial["progress"]
        assert progress["phase_quota"] == 45
        assert progress["total_quota"] == 595
        assert progress["plays_done"] == 1

    def test_training_answer_reveals_truth(self, client):
        session_id = client.post("/sessions", json={"scheme": "primary", "seed": 2}).json()[
            "session_id"
        ]
        trial = client.get(f"/sessions/{session_id}/next").json()
        r = client.post(
            f"/sessions/{session_id}/answers",
            json={"stimulus_id": trial["stimulus_id"], "label": trial["options"][0]},
        )
        body = r.json()
        assert set(body.keys()) == {"truth", "correct", "progress"}
        assert body["correct"] == (body["truth"] == trial["options"][0])

    def test_answer_errors_are_structured(self, client):
        session_id = client.post("/sessions", json={"scheme": "primary", "seed": 3}).json()[
            "session_id"
        ]
        client.get(f"/sessions/{session_id}/next")
        r = client.post(
            f"/sessions/{session_id}/answers",
            json={"stimulus_id": "wrong-stimulus", "label": None},
        )
        assert r.status_code == 409
        body = r.json()
        assert body["code"] == "session_error"
        assert "pending" in body["message"]

    def test_unknown_session_404(self, client):
        r = client.get("/sessions/doesnotexist/next")
        assert r.status_code == 404
        assert r.json()["code"] == "session_not_found"

    def test_report_before_completion_409(self, client):
        session_id = client.post("/sessions", json={"scheme": "primary", "seed": 4}).json()[
            "session_id"
        ]
        r = client.get(f"/sessions/{session_id}/report")
        assert r.status_code == 409
        assert r.json()["code"] == "session_incomplete"

    def test_custom_advanced_quota(self, client):
        session_id = client.post(
            "/sessions", json={"scheme": "primary", "seed": 5, "advanced_quota": 1}
        ).json()["session_id"]
        trial = client.get(f"/sessions/{session_id}/next").json()
        # 345 lesson plays + 10x1 advanced + 100 testing
        assert trial["progress"]["total_quota"] == 455


class TestCompletedSession:
    def test_report_contents(self, client, completed_session):
        r = client.get(f"/sessions/{completed_session}/report")
        assert r.status_code == 200
        report = r.json()
        assert report["scheme"] == "primary"
        assert report["n_test_answers"] == 100
        assert 0.0 <= report["macro_f1"] <= 1.0
        assert len(report["per_class"]) == 10
        counts = report["confusion"]["counts"]
        assert len(counts) == 10 and len(counts[0]) == 10
        assert sum(sum(row) for row in counts) == 100
        assert report["confusion"]["labels"] == sorted(report["confusion"]["labels"])

    def test_next_after_completion_conflicts(self, client, completed_session):
        r = client.get(f"/sessions/{completed_session}/next")
        assert r.status_code == 409
        assert r.json()["code"] == "session_complete"

    def test_report_is_idempotent(self, client, completed_session):
        a = client.get(f"/sessions/{completed_session}/report").json()
        b = client.get(f"/sessions/{completed_session}/report").json()
        assert a == b

    def test_survives_service_restart(self, config, client, completed_session):
        before = client.get(f"/sessions/{completed_session}/report").json()
        fresh = TestClient(create_app(config))  # same data_dir, empty memory
        listed = fresh.get("/sessions").json()["sessions"]
        assert completed_session in listed
        after = fresh.get(f"/sessions/{completed_session}/report").json()
        assert after == before


class TestAudio:
    def test_audio_bytes_and_cache(self, client):
        session_id = client.post("/sessions", json={"scheme": "primary", "seed": 6}).json()[
            "session_id"
        ]
        trial = client.get(f"/sessions/{session_id}/next").json()
        first = client.get(trial["audio_url"])
        assert first.status_code == 200
        assert first.headers["content-type"] == "audio/wav"
        assert first.content[:4] == b"RIFF"
        again = client.get(trial["audio_url"])
        assert again.content == first.content

    def test_audio_differs_across_schemes(self, client):
        a = client.get("/audio/shapes-circle?scheme=primary")
        b = client.get("/audio/shapes-circle?scheme=long")
        assert a.status_code == b.status_code == 200
        assert len(b.content) > len(a.content)  # 2 s scan vs 1.05 s scan

    def test_unknown_stimulus_404(self, client):
        r = client.get("/audio/nothing-here?scheme=primary")
        assert r.status_code == 404
        assert r.json()["code"] == "stimulus_not_found"

    def test_unknown_scheme_404(self, client):
        r = client.get("/audio/shapes-circle?scheme=mystery")
        assert r.status_code == 404
        assert r.json()["code"] == "scheme_not_found"


class TestSchemesEndpoint:
    def test_presets_listed(self, client):
        entries = {e["name"]: e for e in client.get("/schemes").json()["schemes"]}
        assert {"primary", "long", "tanh"} <= set(entries)
        assert entries["primary"]["duration_s"] == 1.05
        assert entries["long"]["duration_s"] == 2.0
        assert entries["primary"]["sample_rate_hz"] == 16000
        assert entries["tanh"]["map"] == "RectifiedTanhMap"

    def test_scheme_files_join_registry(self, tmp_path, tanh2):
        data_dir = tmp_path / "data"
        (data_dir / "schemes").mkdir(parents=True)
        (data_dir / "schemes" / "tanh2.scheme").write_text(scheme_to_text(tanh2))
        local = TestClient(create_app(ServiceConfig(data_dir=data_dir, corpus_size=32)))
        entries = {e["name"] for e in local.get("/schemes").json()["schemes"]}
        assert "tanh2" in entries
        r = local.get("/audio/shapes-circle?scheme=tanh2")
        assert r.status_code == 200


class TestStaticMount:
    def test_ui_served_when_configured(self, tmp_path):
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<!doctype html><title>soundsight</title>")
        cfg = ServiceConfig(data_dir=tmp_path / "data", corpus_size=32, static_dir=static)
        local = TestClient(create_app(cfg))
        r = local.get("/")
        assert r.status_code == 200
        assert "soundsight" in r.text

    def test_no_mount_without_static_dir(self, client):
        assert client.get("/").status_code == 404


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.listen_host == "127.0.0.1"
        assert cfg.listen_port == 8000
        assert cfg.data_dir == __import__("pathlib").Path("data")

    def test_file_parsing(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text(
            "# comment\n"
            "listen_host = 0.0.0.0\n"
            "listen_port = 9001\n"
            "data_dir = /tmp/ss\n"
            "corpus_size = 48\n"
            "corpus_seed = 3\n"
            "advanced_quota = 5\n"
        )
        cfg = load_config(path)
        assert cfg.listen_host == "0.0.0.0"
        assert cfg.listen_port == 9001
        assert str(cfg.data_dir) == "/tmp/ss"
        assert cfg.corpus_size == 48
        assert cfg.corpus_seed == 3
        assert cfg.advanced_quota == 5

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("volume = 11\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config(path)

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("listen_port 9001\n")
        with pytest.raises(ValueError, match="bad config line"):
            load_config(path)

    def test_env_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "svc.conf"
        path.write_text("listen_port = 9001\n")
        monkeypatch.setenv("SOUNDSIGHT_LISTEN", "10.0.0.5:7777")
        monkeypatch.setenv("SOUNDSIGHT_DATA_DIR", "/tmp/elsewhere")
        cfg = load_config(path)
        assert cfg.listen_host == "10.0.0.5"
        assert cfg.listen_port == 7777
        assert str(cfg.data_dir) == "/tmp/elsewhere"

    def test_bad_listen_env(self, monkeypatch):
        monkeypatch.setenv("SOUNDSIGHT_LISTEN", "8000")
        with pytest.raises(ValueError, match="host:port"):
            load_config()
