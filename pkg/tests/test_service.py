import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from miron.compiler import compile_model
from miron.config import RunConfig
from miron.service import BadMessage, create_app, validate_client_message

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"
WIRE_EXAMPLES = ROOT / "docs" / "wire_examples"

SERVER_TYPES = {"session_created", "system_utterance", "state_snapshot", "engine_event", "error"}


@pytest.fixture(scope="module")
def artifacts():
    return compile_model((MODELS / "receptionist.model").read_text())


@pytest.fixture()
def client(artifacts):
    config = RunConfig(kv_file=str(MODELS / "visitors.json"), clock_time="14:30")
    app = create_app({"receptionist": artifacts}, config)
    with TestClient(app) as test_client:
        yield test_client


def drain_turn(ws):
    """Collect messages up to and including the turn's state_snapshot."""
    messages = []
    while True:
        message = ws.receive_json()
        messages.append(message)
        if message["type"] in ("state_snapshot", "error"):
            return messages


def test_health_and_models(client):
    assert client.get("/health").json()["status"] == "ok"
    assert client.get("/models").json() == {"models": ["receptionist"]}


def test_wire_examples_match_validator_and_server_shapes(client):
    for path in sorted(WIRE_EXAMPLES.glob("*.json")):
        message = json.loads(path.read_text())
        if message["type"] in SERVER_TYPES:
            assert message["type"] in SERVER_TYPES
            if message["type"] != "error":
                assert isinstance(message["seq"], int)
                assert isinstance(message["session"], str)
        else:
            assert validate_client_message(message) == message


def test_create_session_and_greet(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "create_session", "model_id": "receptionist", "seed": 7})
        created = ws.receive_json()
        assert created["type"] == "session_created"
        session = created["session"]
        opening = drain_turn(ws)
        texts = [m["text"] for m in opening if m["type"] == "system_utterance"]
        assert len(texts) == 2  # welcome + first question
        assert opening[-1]["type"] == "state_snapshot"
        assert opening[-1]["snapshot"]["working_memory"]["awaitingName"] == "activated"

        ws.send_json({"type": "user_utterance", "session": session, "text": "Hello"})
        turn = drain_turn(ws)
        utterances = [m for m in turn if m["type"] == "system_utterance"]
        assert len(utterances) == 1
        assert utterances[0]["intent"] == "say_Hello"
        snapshot = turn[-1]["snapshot"]
        assert snapshot["working_memory"]["greetingsExpected"] == "inhibited"


def test_engine_events_stream_rule_activity(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "create_session", "seed": 3})
        ws.receive_json()
        opening = drain_turn(ws)
        rule_events = [m for m in opening if m["type"] == "engine_event" and m["kind"] == "rules"]
        assert any("init" in e["detail"]["active"] for e in rule_events)


def test_snapshot_on_fresh_session(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "create_session", "seed": 1})
        created = ws.receive_json()
        drain_turn(ws)
        ws.send_json({"type": "get_snapshot", "session": created["session"]})
        snap = ws.receive_json()
        assert snap["type"] == "state_snapshot"
        assert snap["snapshot"]["step"] >= 1


def test_sequence_numbers_strictly_increase(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "create_session", "seed": 5})
        seqs = [ws.receive_json()["seq"]]
        for message in drain_turn(ws):
            seqs.append(message["seq"])
        ws.send_json({"type": "user_utterance", "session": "s1", "text": "hi"})
        for message in drain_turn(ws):
            seqs.append(message["seq"])
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)


def test_unknown_session_error(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "get_snapshot", "session": "s999"})
        message = ws.receive_json()
        assert message["type"] == "error"
        assert message["code"] == "unknown_session"


def test_bad_message_error(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "destroy_everything"})
        message = ws.receive_json()
        assert message == {
            "type": "error",
            "code": "bad_message",
            "message": "unknown message type 'destroy_everything'",
        }


def test_validate_client_message_rejects_bad_shapes():
    for bad in [
        [],
        {"type": "user_utterance", "session": "s1"},
        {"type": "create_session", "seed": "tomorrow"},
        {"type": "get_snapshot"},
    ]:
        with pytest.raises(BadMessage):
            validate_client_message(bad)


def script_session(ws, seed, lines):
    """Create a session and run a scripted dialog; returns per-turn payloads."""
    ws.send_json({"type": "create_session", "model_id": "receptionist", "seed": seed})
    session = ws.receive_json()["session"]
    turns = [drain_turn(ws)]
    for line in lines:
        ws.send_json({"type": "user_utterance", "session": session, "text": line})
        turns.append(drain_turn(ws))
    return session, turns


def strip_session_ids(turns):
    return [
        [{k: v for k, v in m.items() if k not in ("session",)} for m in turn]
        for turn in turns
    ]


def test_concurrent_sessions_match_serial_replay(client, artifacts):
    script_a = ["Hello", "My name is Jane Smith", "I am from Acme"]
    script_b = ["what time is it?", "My name is Boris Chen"]
    # interleaved over two sockets
    with client.websocket_connect("/ws") as ws_a, client.websocket_connect("/ws") as ws_b:
        ws_a.send_json({"type": "create_session", "model_id": "receptionist", "seed": 21})
        session_a = ws_a.receive_json()["session"]
        turns_a = [drain_turn(ws_a)]
        ws_b.send_json({"type": "create_session", "model_id": "receptionist", "seed": 22})
        session_b = ws_b.receive_json()["session"]
        turns_b = [drain_turn(ws_b)]
        for line_a, line_b in zip(script_a, script_b + [None]):
            ws_a.send_json({"type": "user_utterance", "session": session_a, "text": line_a})
            turns_a.append(drain_turn(ws_a))
            if line_b is not None:
                ws_b.send_json({"type": "user_utterance", "session": session_b, "text": line_b})
                turns_b.append(drain_turn(ws_b))
    # serial runs with the same seeds on a fresh service
    config = RunConfig(kv_file=str(MODELS / "visitors.json"), clock_time="14:30")
    with TestClient(create_app({"receptionist": artifacts}, config)) as serial_client:
        with serial_client.websocket_connect("/ws") as ws:
            _, serial_a = script_session(ws, 21, script_a)
        with serial_client.websocket_connect("/ws") as ws:
            _, serial_b = script_session(ws, 22, script_b)
    assert strip_session_ids(turns_a) == strip_session_ids(serial_a)
    assert strip_session_ids(turns_b) == strip_session_ids(serial_b)


def test_idle_sessions_reaped(artifacts):
    config = RunConfig(idle_timeout_s=0.05)
    app = create_app({"receptionist": artifacts}, config, reap_interval_s=0.05)
    with TestClient(app) as test_client:
        with test_client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "create_session", "seed": 1})
            created = ws.receive_json()
            drain_turn(ws)
            closed = ws.receive_json()  # reaper notice arrives on the socket
            assert closed["type"] == "engine_event"
            assert closed["kind"] == "closed"
            ws.send_json({"type": "get_snapshot", "session": created["session"]})
            gone = ws.receive_json()
            assert gone["type"] == "error" and gone["code"] == "unknown_session"
