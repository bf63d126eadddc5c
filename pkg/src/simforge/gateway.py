"""Provider-agnostic completion client with record/replay cassettes.

Three modes share one call shape:

* ``live``   — forward to the configured provider (120 s timeout, one retry).
* ``record`` — live call, then append the exchange to the cassette.
* ``replay`` — look the response up by request fingerprint; never touches
  the network.

Cassettes are append-only JSONL, one exchange per line, image payloads
base64-encoded, so diffs stay mergeable in version control.
"""
from __future__ import annotations

import base64
import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import GatewayTimeoutError, ProviderError, ReplayMissError

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_MAX_TOKENS = 8192

Provider = Callable[["LlmRequest"], str]


@dataclass(frozen=True)
class Message:
    role: str
    text: str


@dataclass(frozen=True)
class ImageAttachment:
    mime_type: str
    data: bytes


@dataclass(frozen=True)
class LlmRequest:
    messages: tuple[Message, ...]
    images: tuple[ImageAttachment, ...] = ()
    max_tokens: int = DEFAULT_MAX_TOKENS
    tag: str = ""

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class LlmExchange:
    request: LlmRequest
    response_text: str
    latency_s: float
    fingerprint: str


def _normalize_text(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.split("\n"))


def fingerprint_request(req: LlmRequest) -> str:
    """Stable digest of (tag + normalized messages + raw image bytes)."""
    h = hashlib.sha256()
    h.update(req.tag.encode("utf-8"))
    h.update(b"\x00")
    for m in req.messages:
        h.update(m.role.encode("utf-8"))
        h.update(b"\x01")
        h.update(_normalize_text(m.text).encode("utf-8"))
        h.update(b"\x02")
    for img in req.images:
        h.update(img.mime_type.encode("utf-8"))
        h.update(b"\x03")
        h.update(hashlib.sha256(img.data).digest())
    return h.hexdigest()


def request_to_wire(req: LlmRequest) -> dict:
    return {
        "messages": [{"role": m.role, "text": m.text} for m in req.messages],
        "images": [
            {"mimeType": i.mime_type, "dataB64": base64.b64encode(i.data).decode("ascii")}
            for i in req.images
        ],
        "maxTokens": req.max_tokens,
    }


def request_from_wire(data: dict, tag: str) -> LlmRequest:
    return LlmRequest(
        messages=tuple(Message(m["role"], m["text"]) for m in data["messages"]),
        images=tuple(
            ImageAttachment(i["mimeType"], base64.b64decode(i["dataB64"])) for i in data["images"]
        ),
        max_tokens=data["maxTokens"],
        tag=tag,
    )


class HttpProvider:
    """Binding to a hosted chat-completion endpoint (messages-style JSON API)."""

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model: str,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        temperature: float = 0.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s
        self.temperature = temperature

    def __call__(self, req: LlmRequest) -> str:
        import httpx

        content: list[dict] = []
        for img in req.images:
            content.append(
                {
                    "type": "image",
                    "source": {
                        "type": "base64",
                        "media_type": img.mime_type,
                        "data": base64.b64encode(img.data).decode("ascii"),
                    },
                }
            )
        body = {
            "model": self.model,
            "max_tokens": req.max_tokens,
            "temperature": self.temperature,
            "messages": [],
        }
        for i, m in enumerate(req.messages):
            parts: list[dict] = [{"type": "text", "text": m.text}]
            if i == len(req.messages) - 1 and content:
                parts = content + parts
            body["messages"].append({"role": m.role, "content": parts})
        try:
            resp = httpx.post(
                f"{self.base_url}/v1/messages",
                json=body,
                headers={"x-api-key": self.api_key, "anthropic-version": "2023-06-01"},
                timeout=self.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise GatewayTimeoutError(self.timeout_s) from exc
        if resp.status_code >= 400:
            raise ProviderError(resp.status_code, resp.text[:500])
        data = resp.json()
        blocks = data.get("content", [])
        texts = [b.get("text", "") for b in blocks if b.get("type") == "text"]
        return "".join(texts)


@dataclass
class GatewayConfig:
    mode: str = "replay"  # live | record | replay
    cassette_path: Optional[Path] = None
    provider: Optional[Provider] = None
    retry_jitter_s: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown gateway mode: {self.mode!r}")
        if self.cassette_path is not None:
            self.cassette_path = Path(self.cassette_path)


class Gateway:
    """Shareable completion client; cassette appends are lock-serialized."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self._write_lock = threading.Lock()
        self._replay_index: dict[str, str] | None = None
        self._replay_tags: set[str] = set()
        if config.mode in ("live", "record") and config.provider is None:
            raise ValueError(f"{config.mode} mode requires a provider")
        if config.mode in ("record", "replay") and config.cassette_path is None:
            raise ValueError(f"{config.mode} mode requires a cassette path")

    # -- public API ---------------------------------------------------------

    def complete(self, req: LlmRequest) -> str:
        if self.config.mode == "replay":
            return self._replay(req)
        text, latency = self._call_provider(req)
        if self.config.mode == "record":
            self._append(LlmExchange(req, text, latency, fingerprint_request(req)))
        return text

    # -- live ---------------------------------------------------------------

    def _call_provider(self, req: LlmRequest) -> tuple[str, float]:
        assert self.config.provider is not None
        start = time.monotonic()
        try:
            return self.config.provider(req), time.monotonic() - start
        except (GatewayTimeoutError, ProviderError) as exc:
            if isinstance(exc, ProviderError) and exc.status < 500:
                raise
            time.sleep(random.uniform(0, self.config.retry_jitter_s))
            return self.config.provider(req), time.monotonic() - start

    # -- cassette -------------------------------------------------------------

    def _append(self, exchange: LlmExchange) -> None:
        record = {
            "fingerprint": exchange.fingerprint,
            "tag": exchange.request.tag,
            "request": request_to_wire(exchange.request),
            "responseText": exchange.response_text,
            "latencyMs": round(exchange.latency_s * 1000, 3),
        }
        path = self.config.cassette_path
        assert path is not None
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
        if self._replay_index is not None:
            self._replay_index[exchange.fingerprint] = exchange.response_text
            self._replay_tags.add(exchange.request.tag)

    def _load_index(self) -> None:
        index: dict[str, str] = {}
        tags: set[str] = set()
        path = self.config.cassette_path
        assert path is not None
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                index[record["fingerprint"]] = record["responseText"]
                tags.add(record.get("tag", ""))
        self._replay_index = index
        self._replay_tags = tags

    def _replay(self, req: LlmRequest) -> str:
        if self._replay_index is None:
            self._load_index()
        assert self._replay_index is not None
        fp = fingerprint_request(req)
        if fp not in self._replay_index:
            raise ReplayMissError(fp, req.tag, tuple(sorted(self._replay_tags)))
        return self._replay_index[fp]


class ScriptedProvider:
    """Deterministic in-process provider for recording fixture cassettes.

    Replies are keyed by request tag; a list is consumed in order when the
    same tag is hit repeatedly. Invocations are counted so tests can assert
    that replay mode never calls out.
    """

    def __init__(self, replies: dict[str, "str | list[str]"]):
        self._replies: dict[str, list[str]] = {}
        for tag, value in replies.items():
            self._replies[tag] = [value] if isinstance(value, str) else list(value)
        self.calls = 0
        self.seen_tags: list[str] = []

    def __call__(self, req: LlmRequest) -> str:
        self.calls += 1
        self.seen_tags.append(req.tag)
        queue = self._replies.get(req.tag)
        if not queue:
            raise ProviderError(500, f"scripted provider has no reply for tag {req.tag!r}")
        return queue.pop(0) if len(queue) > 1 else queue[0]


def text_request(tag: str, prompt: str, *, context: Iterable[str] = (), images: Iterable[ImageAttachment] = (), max_tokens: int = DEFAULT_MAX_TOKENS) -> LlmRequest:
    """One user prompt plus optional context messages and image attachments."""
    messages = [Message("user", prompt)]
    messages.extend(Message("user", c) for c in context)
    return LlmRequest(tuple(messages), tuple(images), max_tokens, tag)
