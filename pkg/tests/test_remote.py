import json

import pytest

from mwdefect.config import RemoteConfig
from mwdefect.reason import BackendUnavailable, RemoteBackend, UnparseableResponse, analyze
from mwdefect.reason.prompt import STAGE_HEADERS, mapping_lines
from mwdefect.reason.report import Backend, DefectType

from stub_server import StubServer, free_port_url
from test_reason import ten_marker_set

REPORT = json.dumps([{"type": "widget_over_text", "location": [2, 3], "evidence": "panel",
                      "explanation": "covers label", "confidence": 0.8}])


def backend(url, **kw):
    cfg = RemoteConfig(endpoint=url, model="stub-model", retries=2, backoff_s=0.01, timeout_s=5,
                       **kw)
    sleeps = []
    return RemoteBackend(cfg, sleep=sleeps.append), sleeps


def test_echoed_report_round_trip(monkeypatch):
    monkeypatch.setenv("REASON_API_KEY", "sekret")
    ms, ctx = ten_marker_set()
    with StubServer([(200, REPORT)]) as srv:
        be, _ = backend(srv.url)
        [r] = analyze(ms, None, ctx, be)
    assert r.defect_type is DefectType.WIDGET_OVER_TEXT and r.location == {2, 3}
    assert r.backend is Backend.REMOTE_MODEL and r.confidence == 0.8
    [req] = srv.requests
    assert req["headers"]["Authorization"] == "Bearer sekret"
    body = req["body"]
    assert body["model"] == "stub-model" and body["temperature"] == 0
    system = body["messages"][0]["content"]
    text_part, image_part = body["messages"][1]["content"]
    for h in STAGE_HEADERS:
        assert h in system
    for line in mapping_lines(ms.mapping):
        assert line in text_part["text"]
    assert image_part["image_url"]["url"].startswith("data:image/png;base64,")


def test_env_endpoint(monkeypatch):
    with StubServer([(200, "[]")]) as srv:
        monkeypatch.setenv("REASON_ENDPOINT", srv.url)
        monkeypatch.setenv("REASON_MODEL", "env-model")
        be = RemoteBackend(RemoteConfig(retries=0))
        ms, ctx = ten_marker_set()
        [r] = be.diagnose(ms, ctx)
    assert r.defect_type is DefectType.NORMAL
    assert srv.requests[0]["body"]["model"] == "env-model"


def test_missing_endpoint(monkeypatch):
    monkeypatch.delenv("REASON_ENDPOINT", raising=False)
    with pytest.raises(ValueError):
        RemoteBackend(RemoteConfig())


def test_server_errors_retry_twice_then_unavailable():
    ms, ctx = ten_marker_set()
    with StubServer([(503, "busy")]) as srv:
        be, sleeps = backend(srv.url)
        with pytest.raises(BackendUnavailable):
            be.diagnose(ms, ctx)
    assert len(srv.requests) == 3
    assert sleeps == [0.01, 0.02]


def test_connection_refused_retries_then_unavailable():
    ms, ctx = ten_marker_set()
    be, sleeps = backend(free_port_url())
    with pytest.raises(BackendUnavailable):
        be.diagnose(ms, ctx)
    assert len(sleeps) == 2


def test_recovers_after_transient_failure():
    ms, ctx = ten_marker_set()
    with StubServer([(429, "slow down"), (500, "oops"), (200, REPORT)]) as srv:
        be, sleeps = backend(srv.url)
        [r] = be.diagnose(ms, ctx)
    assert r.defect_type is DefectType.WIDGET_OVER_TEXT and len(srv.requests) == 3


def test_client_error_is_not_retried():
    ms, ctx = ten_marker_set()
    with StubServer([(401, "no")]) as srv:
        be, sleeps = backend(srv.url)
        with pytest.raises(BackendUnavailable):
            be.diagnose(ms, ctx)
    assert len(srv.requests) == 1 and sleeps == []


@pytest.mark.parametrize("script", [
    [(200, "the screen has some problems")],
    [(200, b"<html>not json</html>")],
    [(200, b'{"unexpected": true}')],
])
def test_malformed_responses(script):
    ms, ctx = ten_marker_set()
    with StubServer(script) as srv:
        be, _ = backend(srv.url)
        with pytest.raises(UnparseableResponse):
            be.diagnose(ms, ctx)


def test_out_of_range_markers_pruned():
    ms, ctx = ten_marker_set()
    reply = json.dumps([{"type": "text_overlap", "location": [1, 42]}])
    with StubServer([(200, reply)]) as srv:
        be, _ = backend(srv.url)
        [r] = analyze(ms, None, ctx, be)
    assert r.location == {1}
