"""Chat transports: live OpenAI-compatible HTTP, fixture replay, and recording.

All framework calls go out at temperature 0. Replies are keyed for replay by a
SHA-256 of the canonical request (model, temperature, messages).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

log = logging.getLogger(__name__)

API_KEY_ENV = "HARBOR_API_KEY"
BASE_URL_ENV = "HARBOR_BASE_URL"
DEFAULT_BASE_URL = "http://localhost:8000"
MAX_RETRIES = 2

Message = dict  # {"role": ..., "content": ...}


class TransportError(RuntimeError):
    """A single failed call (network, HTTP status, malformed body)."""


class TransportFailure(RuntimeError):
    """Calls kept failing after the retry budget; the run cannot continue."""


class FixtureMissing(TransportFailure):
    pass


class ChatTransport(Protocol):
    model: str

    def send(self, messages: Sequence[Message], temperature: float = 0.0) -> str: ...


class PolicyEndpoint(Protocol):
    def recommend(self, request: dict) -> str: ...


def request_key(model: str, temperature: float, messages: Sequence[Message]) -> str:
    body = json.dumps({"model": model, "temperature": temperature, "messages": list(messages)},
                      sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def remote_key(endpoint: str, request: dict) -> str:
    body = json.dumps({"endpoint": endpoint, "request": request}, sort_keys=True,
                      ensure_ascii=False)
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def with_retries(fn: Callable[[], str], retries: int = MAX_RETRIES, what: str = "call") -> str:
    last: Optional[Exception] = None
    for attempt in range(retries + 1):
        try:
            return fn()
        except TransportError as exc:
            last = exc
            log.warning("%s failed (attempt %d/%d): %s", what, attempt + 1, retries + 1, exc)
    raise TransportFailure(f"{what} failed after {retries + 1} attempts: {last}") from last


class OpenAIChatTransport:
    """POSTs to ``{base_url}/v1/chat/completions``; reads the first choice."""

    def __init__(self, model: str, base_url: Optional[str] = None,
                 api_key: Optional[str] = None, timeout: float = 120.0, client=None):
        import httpx

        self.model = model
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL)).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._client = client or httpx.Client(timeout=timeout)
        self._httpx = httpx

    def send(self, messages, temperature=0.0):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model, "temperature": temperature, "messages": list(messages)}
        try:
            resp = self._client.post(f"{self.base_url}/v1/chat/completions", json=payload,
                                     headers=headers)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except (self._httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(str(exc)) from exc


class HTTPPolicyEndpoint:
    """Remote bid/withdraw recommender. Request and response are JSON; the
    response may be ``{"text": ...}`` or a bare string."""

    def __init__(self, url: str, timeout: float = 60.0, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=timeout)
        self._httpx = httpx

    def recommend(self, request):
        try:
            resp = self._client.post(self.url, json=request)
            resp.raise_for_status()
        except self._httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            return resp.text
        if isinstance(body, dict):
            for key in ("text", "response", "content"):
                if isinstance(body.get(key), str):
                    return body[key]
        if isinstance(body, str):
            return body
        raise TransportError("unrecognised policy endpoint response")


class FixtureStore:
    """Thread-safe JSON file of recorded replies."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self.chat: dict[str, str] = {}
        self.remote: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            data = json.loads(self.path.read_text())
            self.chat = dict(data.get("chat", {}))
            self.remote = dict(data.get("remote", {}))

    def save(self, path: Optional[str | Path] = None) -> None:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no fixture path")
        with self._lock:
            data = {"chat": dict(sorted(self.chat.items())),
                    "remote": dict(sorted(self.remote.items()))}
        target.write_text(json.dumps(data, indent=1, ensure_ascii=False) + "\n")

    def put_chat(self, key: str, reply: str) -> None:
        with self._lock:
            self.chat[key] = reply

    def put_remote(self, key: str, reply: str) -> None:
        with self._lock:
            self.remote[key] = reply


class MockTransport:
    """Replays recorded replies; a request with no fixture is a hard failure."""

    def __init__(self, model: str, store: FixtureStore):
        self.model = model
        self.store = store

    def send(self, messages, temperature=0.0):
        key = request_key(self.model, temperature, messages)
        try:
            return self.store.chat[key]
        except KeyError:
            raise FixtureMissing(f"no recorded reply for request {key[:12]} "
                                 f"(model {self.model})") from None


class RecordingTransport:
    """Forwards to ``inner`` and stores every reply in ``store``."""

    def __init__(self, inner: ChatTransport, store: FixtureStore):
        self.inner = inner
        self.model = inner.model
        self.store = store

    def send(self, messages, temperature=0.0):
        reply = self.inner.send(messages, temperature)
        self.store.put_chat(request_key(self.model, temperature, messages), reply)
        return reply


class MockEndpoint:
    def __init__(self, name: str, store: FixtureStore):
        self.name = name
        self.store = store

    def recommend(self, request):
        key = remote_key(self.name, request)
        try:
            return self.store.remote[key]
        except KeyError:
            raise FixtureMissing(f"no recorded policy reply for request {key[:12]}") from None


class RecordingEndpoint:
    def __init__(self, name: str, inner: PolicyEndpoint, store: FixtureStore):
        self.name = name
        self.inner = inner
        self.store = store

    def recommend(self, request):
        reply = self.inner.recommend(request)
        self.store.put_remote(remote_key(self.name, request), reply)
        return reply
