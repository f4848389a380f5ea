"""Live service: session lifecycle, streaming, feedback, equivalence."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from minivox.bench import StreamSpec, engine_config_for, generate_stream, load_pool, simulate
from minivox.engine import CORRECT, EngineConfig, Session, parse_label
from minivox.features import MfccConfig
from minivox.service import PENDING_WINDOW, SessionWorker, create_app

from conftest import build_wav_pool, speaker_tone


def pcm16(samples: np.ndarray) -> bytes:
    return np.round(np.asarray(samples) * 32768.0).clip(-32768, 32767).astype("<i2").tobytes()


def make_worker(agent="berlinucb", window=PENDING_WINDOW):
    config = EngineConfig(agent=agent, dim=20, mode="interactive")
    return SessionWorker(config, MfccConfig(), pending_window=window)


@pytest.fixture
def client():
    return TestClient(create_app())


class TestWorkerBuffering:
    def test_first_event_needs_full_window(self):
        worker = make_worker()
        audio = speaker_tone(0, 480, seed=80)
        assert worker.push_audio(pcm16(audio[:399])) == []
        events = worker.push_audio(pcm16(audio[399:400]))
        assert len(events) == 1
        assert events[0]["frame_index"] == 0

    def test_one_hop_after_warm_buffer_is_one_event(self):
        worker = make_worker()
        audio = speaker_tone(0, 560, seed=81)
        assert len(worker.push_audio(pcm16(audio[:400]))) == 1
        assert len(worker.push_audio(pcm16(audio[400:480]))) == 0  # half a hop retained
        assert len(worker.push_audio(pcm16(audio[480:560]))) == 1

    def test_chunk_partition_invariance(self):
        audio = speaker_tone(1, 4000, seed=82)
        blob = pcm16(audio)
        whole = make_worker()
        events_whole = whole.push_audio(blob)

        pieces = make_worker()
        events_pieces = []
        rng = np.random.default_rng(83)
        pos = 0
        while pos < len(blob):
            step = int(rng.integers(1, 333))  # odd sizes split int16 samples mid-byte
            events_pieces.extend(pieces.push_audio(blob[pos:pos + step]))
            pos += step
        assert events_pieces == events_whole
        assert len(events_whole) == (4000 - 400) // 160 + 1

    def test_feedback_on_new_decision_grows_arms(self):
        worker = make_worker()
        audio = speaker_tone(0, 400, seed=84)
        events = worker.push_audio(pcm16(audio))
        assert events[0]["chosen"] == "New"
        ack = worker.apply_feedback(0, CORRECT)
        assert ack["applied"] is True
        assert ack["registered"] == "User 1"
        assert "User 1" in ack["arm_labels"]


class TestHttpApi:
    def test_create_session_cold_start(self, client):
        response = client.post("/sessions", json={"agent": "berlinucb"})
        assert response.status_code == 200
        body = response.json()
        assert body["arm_labels"] == ["New", "NoSpeaker"]
        assert body["config"]["dim"] == 20

    def test_create_session_with_oracle(self, client):
        response = client.post("/sessions", json={"agent": "linucb", "oracle_speakers": 3})
        assert response.json()["arm_labels"] == ["NoSpeaker", "User 1", "User 2", "User 3"]

    def test_malformed_config_rejected_with_reason(self, client):
        response = client.post("/sessions", json={"agent": "nonsense"})
        assert response.status_code == 400
        assert "agent" in response.json()["detail"]

    def test_unknown_session_is_404(self, client):
        assert client.delete("/sessions/nope").status_code == 404
        assert client.get("/sessions/nope/snapshot").status_code == 404
        assert client.post("/sessions/nope/feedback",
                           json={"frame_index": 0, "kind": "correct"}).status_code == 404

    def test_delete_session(self, client):
        sid = client.post("/sessions", json={}).json()["id"]
        assert client.delete(f"/sessions/{sid}").status_code == 200
        assert client.delete(f"/sessions/{sid}").status_code == 404

    def test_stream_feedback_snapshot_round_trip(self, client):
        sid = client.post("/sessions", json={"agent": "berlinucb"}).json()["id"]
        audio = speaker_tone(2, 720, seed=85)
        with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
            ws.send_bytes(pcm16(audio))
            first = ws.receive_json()
            second = ws.receive_json()
            third = ws.receive_json()
        assert [e["frame_index"] for e in (first, second, third)] == [0, 1, 2]
        assert all(len(e["scores"]) == len(e["arm_labels"]) for e in (first, second, third))

        # approve the New decision on frame 0 -> a User arm appears
        response = client.post(f"/sessions/{sid}/feedback",
                               json={"frame_index": 0, "kind": "correct"})
        assert response.status_code == 200
        assert response.json()["registered"] == "User 1"

        snapshot = client.get(f"/sessions/{sid}/snapshot")
        assert snapshot.status_code == 200
        restored = Session.restore(snapshot.content)
        assert [str(l) for l in restored.arm_labels()] == ["New", "NoSpeaker", "User 1"]

    def test_feedback_over_websocket(self, client):
        sid = client.post("/sessions", json={"agent": "berlinucb"}).json()["id"]
        audio = speaker_tone(0, 400, seed=86)
        with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
            ws.send_bytes(pcm16(audio))
            event = ws.receive_json()
            assert event["chosen"] == "New"
            ws.send_text(json.dumps({"frame_index": 0, "kind": "correct"}))
            ack = ws.receive_json()
        assert ack["type"] == "ack" and ack["registered"] == "User 1"

    def test_new_speaker_on_user_decision_transfers_stats(self, client):
        sid = client.post("/sessions", json={"agent": "berlinucb"}).json()["id"]
        worker = next(iter(client.app.state.sessions.values()))
        worker.push_audio(pcm16(speaker_tone(1, 400 + 160 * 6, seed=91)))
        client.post(f"/sessions/{sid}/feedback", json={"frame_index": 0, "kind": "correct"})
        events = worker.push_audio(pcm16(speaker_tone(1, 160 * 4, seed=92)))
        assert events[0]["chosen"] == "User 1"
        response = client.post(
            f"/sessions/{sid}/feedback",
            json={"frame_index": events[0]["frame_index"], "kind": "wrong", "correct_label": "New"},
        )
        assert response.status_code == 200
        assert response.json()["registered"] == "User 2"
        restored = Session.restore(client.get(f"/sessions/{sid}/snapshot").content)
        source = restored.arms[parse_label("User 1")]
        clone = restored.arms[parse_label("User 2")]
        assert np.array_equal(clone.A, source.A)  # transfer copied the statistics
        assert np.array_equal(clone.b, source.b)

    def test_stale_frame_is_410(self, client):
        sid = client.post("/sessions", json={"agent": "linucb", "pending_window": 2}).json()["id"]
        worker = next(iter(client.app.state.sessions.values()))
        worker.push_audio(pcm16(speaker_tone(0, 400 + 160 * 5, seed=87)))
        response = client.post(f"/sessions/{sid}/feedback",
                               json={"frame_index": 0, "kind": "correct"})
        assert response.status_code == 410

    def test_unknown_arm_in_feedback_is_400(self, client):
        sid = client.post("/sessions", json={"agent": "linucb"}).json()["id"]
        worker = next(iter(client.app.state.sessions.values()))
        worker.push_audio(pcm16(speaker_tone(0, 400, seed=88)))
        response = client.post(f"/sessions/{sid}/feedback",
                               json={"frame_index": 0, "kind": "wrong", "correct_label": "User 9"})
        assert response.status_code == 400

    def test_future_frame_is_400(self, client):
        sid = client.post("/sessions", json={"agent": "linucb"}).json()["id"]
        response = client.post(f"/sessions/{sid}/feedback",
                               json={"frame_index": 5, "kind": "correct"})
        assert response.status_code == 400

    def test_silence_on_correct_non_new_is_noop_ack(self, client):
        sid = client.post("/sessions", json={"agent": "berlinucb", "oracle_speakers": 2}).json()["id"]
        worker = next(iter(client.app.state.sessions.values()))
        worker.push_audio(pcm16(speaker_tone(0, 400, seed=89)))
        before = worker.snapshot()
        response = client.post(f"/sessions/{sid}/feedback",
                               json={"frame_index": 0, "kind": "correct"})
        assert response.status_code == 200
        assert response.json()["applied"] is False
        assert worker.snapshot() == before


class TestSimulateEquivalence:
    @pytest.mark.parametrize("agent", ["linucb", "berlinucb", "b-kmeans"])
    def test_no_feedback_session_matches_reveal_zero_run(self, tmp_path, agent):
        manifest = build_wav_pool(tmp_path / "pool", n_speakers=2, utt_samples=3200)
        pool = load_pool(manifest)
        stream = generate_stream(pool, StreamSpec(2, 50, 0.0, seed=90))
        trace = simulate(stream, engine_config_for(stream, agent, mode="interactive"))

        worker = SessionWorker(EngineConfig(agent=agent, dim=20, mode="interactive"))
        blob = pcm16(stream.samples)
        events = []
        for pos in range(0, len(blob), 1000):
            events.extend(worker.push_audio(blob[pos:pos + 1000]))
        assert [e["chosen"] for e in events] == trace.chosen
        assert len(events) == len(stream)
