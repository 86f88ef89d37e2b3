import json
import threading
import time

import httpx
import pytest

from babybench.client import (
    AuditLog,
    AuthenticationError,
    HTTPModel,
    LocalModel,
    ModelConfig,
    ModelTimeoutError,
    RetriesExhaustedError,
    complete_many,
)
from babybench.datagen import gen_predict
from babybench.harness import parse_response

ENV = {"OPENAI_API_KEY": "sk-test-secret", "ANTHROPIC_API_KEY": "ak-secret"}


def _ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}], "usage": {"total_tokens": 5}})


def _model(handler, provider="openai", **kw):
    cfg = ModelConfig(model="m", provider=provider, url="https://example.invalid/v1", backoff_base=0.5, **kw)
    sleeps = []
    audit = AuditLog()
    m = HTTPModel(cfg, audit, transport=httpx.MockTransport(handler), sleep=sleeps.append, env=ENV)
    return m, sleeps, audit


def test_429_twice_then_200():
    calls = []

    def handler(req):
        calls.append(req)
        return httpx.Response(429) if len(calls) <= 2 else _ok("hello")

    m, sleeps, audit = _model(handler)
    assert m.complete("prompt", "row-1") == "hello"
    assert len(calls) == 3 and sleeps == [0.5, 1.0]
    body = json.loads(calls[0].content)
    assert body["messages"] == [{"role": "user", "content": "prompt"}] and body["model"] == "m"
    assert calls[0].headers["authorization"] == "Bearer sk-test-secret"
    # the key never reaches the audit log
    assert "sk-test-secret" not in json.dumps(audit.entries)
    assert audit.entries[-1]["usage"] == {"total_tokens": 5}


def test_retries_exhausted():
    m, sleeps, _ = _model(lambda req: httpx.Response(503), max_attempts=3)
    with pytest.raises(RetriesExhaustedError):
        m.complete("p")
    assert len(sleeps) == 2


def test_auth_errors():
    m, _, _ = _model(lambda req: httpx.Response(401))
    with pytest.raises(AuthenticationError):
        m.complete("p")
    cfg = ModelConfig(model="m", provider="openai", api_key_env="NOPE_NOT_SET")
    with pytest.raises(AuthenticationError, match="NOPE_NOT_SET"):
        HTTPModel(cfg, env={}).complete("p")


def test_timeout():
    def handler(req):
        raise httpx.ReadTimeout("slow", request=req)

    m, sleeps, _ = _model(handler, max_attempts=2)
    with pytest.raises(ModelTimeoutError):
        m.complete("p")
    assert sleeps == [0.5]


def test_anthropic_adapter():
    seen = {}

    def handler(req):
        seen["headers"] = req.headers
        return httpx.Response(200, json={"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]})

    m, _, _ = _model(handler, provider="anthropic")
    assert m.complete("p") == "ab"
    assert seen["headers"]["x-api-key"] == "ak-secret" and "anthropic-version" in seen["headers"]


def test_config_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"model": "llama", "provider": "deepinfra", "temperature": 0.2}))
    cfg = ModelConfig.from_file(p)
    assert cfg.endpoint().startswith("https://api.deepinfra.com") and cfg.key_env() == "DEEPINFRA_API_KEY"
    p.write_text(json.dumps({"model": "x", "api_key": "sk-oops"}))
    with pytest.raises(ValueError, match="environment"):
        ModelConfig.from_file(p)


def test_local_models():
    row = gen_predict("GoTo", 2)
    oracle = LocalModel("oracle")
    assert parse_response("predict", oracle.complete("p", "r", row)).value == row.target_state
    assert LocalModel("silent").complete("p") == ""
    with pytest.raises(ValueError):
        LocalModel("gpt")


class _SlowEcho:
    def __init__(self):
        self.live = 0
        self.peak = 0
        self.lock = threading.Lock()

    def complete(self, prompt, row_id=None, row=None):
        with self.lock:
            self.live += 1
            self.peak = max(self.peak, self.live)
        # later rows finish first
        time.sleep(0.002 * (20 - int(row_id)))
        with self.lock:
            self.live -= 1
        return f"answer {row_id}"


def test_bounded_concurrency_keyed_results():
    model = _SlowEcho()
    jobs = [(str(i), f"p{i}", None) for i in range(20)]
    res = complete_many(model, jobs, max_concurrency=3)
    assert model.peak <= 3
    assert res.answers == {str(i): f"answer {i}" for i in range(20)}


def test_batch_keeps_errors_in_place():
    def handler(req):
        return httpx.Response(500) if b"bad" in req.content else _ok("fine")

    m, _, _ = _model(handler, max_attempts=1)
    res = complete_many(m, [("a", "good", None), ("b", "bad", None)], 2)
    assert res.answers["a"] == "fine" and isinstance(res.errors["b"], RetriesExhaustedError)
