"""Chat-completion clients (HTTP providers plus local stand-ins) with retries and an audit log."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence, Union

import httpx

LOCAL_KINDS = ("oracle", "silent")
PROVIDERS = ("openai", "anthropic", "deepinfra", "local")


class ModelError(RuntimeError):
    pass


class AuthenticationError(ModelError):
    pass


class RetriesExhaustedError(ModelError):
    pass


class ModelTimeoutError(ModelError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Provider settings. Only the *name* of the key variable is stored, never the key."""

    model: str
    provider: str = "openai"
    url: Optional[str] = None
    api_key_env: Optional[str] = None
    temperature: float = 0.0
    max_tokens: int = 2048
    max_attempts: int = 5
    backoff_base: float = 1.0
    timeout: float = 120.0
    max_concurrency: int = 4
    line_order: str = "execution"

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r}")
        if self.provider == "local" and self.model not in LOCAL_KINDS:
            raise ValueError(f"local models are {LOCAL_KINDS}")
        if self.max_attempts < 1 or self.max_concurrency < 1:
            raise ValueError("max_attempts and max_concurrency must be positive")

    @classmethod
    def local(cls, kind: str) -> "ModelConfig":
        return cls(model=kind, provider="local")

    @classmethod
    def from_file(cls, path: Union[str, os.PathLike]) -> "ModelConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        if any("key" in k and k != "api_key_env" for k in data):
            raise ValueError("put API keys in environment variables, not config files")
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**data)

    def endpoint(self) -> str:
        if self.url:
            return self.url
        return _ADAPTERS[self.provider].default_url

    def key_env(self) -> str:
        return self.api_key_env or _ADAPTERS[self.provider].default_key_env


# --- provider adapters --------------------------------------------------------------


@dataclass(frozen=True)
class _Adapter:
    default_url: str
    default_key_env: str
    headers: Callable[[str], dict[str, str]]
    body: Callable[[str, ModelConfig], dict[str, Any]]
    text: Callable[[dict], str]
    usage: Callable[[dict], dict]


def _chat_body(prompt: str, cfg: ModelConfig) -> dict[str, Any]:
    return {
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


def _chat_text(resp: dict) -> str:
    return resp["choices"][0]["message"]["content"] or ""


def _anthropic_text(resp: dict) -> str:
    return "".join(b.get("text", "") for b in resp.get("content", []) if b.get("type") == "text")


_OPENAI = _Adapter(
    "https://api.openai.com/v1/chat/completions",
    "OPENAI_API_KEY",
    lambda key: {"Authorization": f"Bearer {key}"},
    _chat_body,
    _chat_text,
    lambda r: r.get("usage") or {},
)
_ADAPTERS = {
    "openai": _OPENAI,
    "deepinfra": _Adapter(
        "https://api.deepinfra.com/v1/openai/chat/completions",
        "DEEPINFRA_API_KEY",
        _OPENAI.headers,
        _chat_body,
        _chat_text,
        _OPENAI.usage,
    ),
    "anthropic": _Adapter(
        "https://api.anthropic.com/v1/messages",
        "ANTHROPIC_API_KEY",
        lambda key: {"x-api-key": key, "anthropic-version": "2023-06-01"},
        _chat_body,
        _anthropic_text,
        lambda r: r.get("usage") or {},
    ),
}


# --- audit log -----------------------------------------------------------------------


class AuditLog:
    """Thread-safe JSONL log of requests; prompts are stored by hash only."""

    def __init__(self, path: Optional[Union[str, os.PathLike]] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self.entries: list[dict] = []

    def write(self, entry: dict) -> None:
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry) + "\n")


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


# --- clients ------------------------------------------------------------------------


RETRYABLE = {408, 409, 425, 429, 500, 502, 503, 504}


class HTTPModel:
    def __init__(
        self,
        cfg: ModelConfig,
        audit: Optional[AuditLog] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
        env: Optional[Mapping[str, str]] = None,
    ):
        self.cfg = cfg
        self.adapter = _ADAPTERS[cfg.provider]
        self.audit = audit or AuditLog()
        self.sleep = sleep
        self._env = os.environ if env is None else env
        self._client = httpx.Client(timeout=cfg.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _key(self) -> str:
        name = self.cfg.key_env()
        key = self._env.get(name)
        if not key:
            raise AuthenticationError(f"environment variable {name} is not set")
        return key

    def complete(self, prompt: str, row_id: Optional[str] = None, row: Any = None) -> str:
        cfg = self.cfg
        headers = {"content-type": "application/json", **self.adapter.headers(self._key())}
        body = self.adapter.body(prompt, cfg)
        base = {"row_id": row_id, "model": cfg.model, "provider": cfg.provider, "prompt_sha256": prompt_hash(prompt)}
        last = ""
        for attempt in range(cfg.max_attempts):
            t0 = time.monotonic()
            try:
                resp = self._client.post(cfg.endpoint(), json=body, headers=headers)
            except httpx.TimeoutException as exc:
                self.audit.write({**base, "attempt": attempt, "error": "timeout", "latency_s": time.monotonic() - t0})
                if attempt + 1 == cfg.max_attempts:
                    raise ModelTimeoutError(f"request timed out after {cfg.timeout}s") from exc
                self.sleep(cfg.backoff_base * 2**attempt)
                continue
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                self.audit.write({**base, "attempt": attempt, "error": last, "latency_s": time.monotonic() - t0})
                if attempt + 1 < cfg.max_attempts:
                    self.sleep(cfg.backoff_base * 2**attempt)
                continue
            latency = time.monotonic() - t0
            entry = {**base, "attempt": attempt, "status": resp.status_code, "latency_s": latency}
            if resp.status_code in (401, 403):
                self.audit.write(entry)
                raise AuthenticationError(f"provider rejected credentials (HTTP {resp.status_code})")
            if resp.status_code in RETRYABLE:
                self.audit.write(entry)
                last = f"HTTP {resp.status_code}"
                if attempt + 1 < cfg.max_attempts:
                    self.sleep(cfg.backoff_base * 2**attempt)
                continue
            if resp.status_code >= 400:
                self.audit.write(entry)
                raise ModelError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            data = resp.json()
            text = self.adapter.text(data)
            entry.update({"usage": self.adapter.usage(data), "response_sha256": prompt_hash(text), "chars": len(text)})
            self.audit.write(entry)
            return text
        raise RetriesExhaustedError(f"{cfg.max_attempts} attempts failed (last: {last})")


class LocalModel:
    """Deterministic stand-ins: "oracle" answers with the expert's solution, "silent" with nothing."""

    def __init__(self, kind: str, line_order: str = "execution", audit: Optional[AuditLog] = None):
        if kind not in LOCAL_KINDS:
            raise ValueError(f"unknown local model {kind!r}")
        self.kind = kind
        self.line_order = line_order
        self.audit = audit or AuditLog()

    def complete(self, prompt: str, row_id: Optional[str] = None, row: Any = None) -> str:
        t0 = time.monotonic()
        if self.kind == "silent":
            text = ""
        else:
            if row is None:
                raise ValueError("the oracle model needs the dataset row")
            from .harness import oracle_answer

            text = oracle_answer(row, self.line_order)
        self.audit.write(
            {
                "row_id": row_id,
                "model": self.kind,
                "provider": "local",
                "prompt_sha256": prompt_hash(prompt),
                "latency_s": time.monotonic() - t0,
                "chars": len(text),
            }
        )
        return text

    def close(self) -> None:
        pass


Model = Union[HTTPModel, LocalModel]


def make_model(cfg: ModelConfig, audit: Optional[AuditLog] = None, **kw: Any) -> Model:
    if cfg.provider == "local":
        return LocalModel(cfg.model, cfg.line_order, audit)
    return HTTPModel(cfg, audit, **kw)


def complete(prompt: str, cfg: ModelConfig, row: Any = None, row_id: Optional[str] = None) -> str:
    model = make_model(cfg)
    try:
        return model.complete(prompt, row_id, row)
    finally:
        model.close()


@dataclass
class BatchResult:
    answers: dict[str, Union[str, BaseException]] = field(default_factory=dict)

    @property
    def errors(self) -> dict[str, BaseException]:
        return {k: v for k, v in self.answers.items() if isinstance(v, BaseException)}


def complete_many(
    model: Model,
    jobs: Sequence[tuple[str, str, Any]],
    max_concurrency: int = 4,
    on_result: Optional[Callable[[str, Union[str, BaseException]], None]] = None,
) -> BatchResult:
    """Run (row_id, prompt, row) jobs with at most `max_concurrency` requests in flight.

    Results are keyed by row id. Authentication failures abort the batch; other
    model errors are stored in place of the answer.
    """
    result = BatchResult()
    lock = threading.Lock()

    def work(job: tuple[str, str, Any]) -> None:
        rid, prompt, row = job
        try:
            ans: Union[str, BaseException] = model.complete(prompt, rid, row)
        except AuthenticationError:
            raise
        except ModelError as exc:
            ans = exc
        with lock:
            result.answers[rid] = ans
            if on_result is not None:
                on_result(rid, ans)

    with ThreadPoolExecutor(max_workers=max(1, max_concurrency)) as pool:
        futures = [pool.submit(work, j) for j in jobs]
        for f in futures:
            f.result()
    return result
