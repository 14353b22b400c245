"""Chat-completions client for a remote multimodal model."""

from __future__ import annotations

import base64
import io
import logging
import threading
import time
from collections.abc import Callable
from typing import Any

import requests

from ..config import RemoteConfig
from ..evidence import RuntimeContext
from ..som import MarkSet
from .prompt import PromptBundle, UnparseableResponse, parse_model_output, serialize_prompt
from .report import Backend, DefectReport

log = logging.getLogger(__name__)


class BackendUnavailable(RuntimeError):
    """Endpoint could not be reached after retries. Safe to retry later."""


def encode_png(image) -> str:
    buf = io.BytesIO()
    image.save(buf, format="PNG", compress_level=1)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def build_request(bundle: PromptBundle, model: str) -> dict[str, Any]:
    user_content: list[dict[str, Any]] = [{"type": "text", "text": bundle.user_text}]
    if bundle.image is not None:
        user_content.append({
            "type": "image_url",
            "image_url": {"url": "data:image/png;base64," + encode_png(bundle.image)},
        })
    return {
        "model": model,
        "temperature": 0,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": user_content},
        ],
    }


def response_text(body: Any) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise UnparseableResponse(f"not a chat-completions body: {exc}") from exc
    if isinstance(content, list):  # content-part form
        content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
    if not isinstance(content, str):
        raise UnparseableResponse("message content is not text")
    return content


class RemoteBackend:
    kind = Backend.REMOTE_MODEL

    def __init__(self, config: RemoteConfig = RemoteConfig(),
                 session: requests.Session | None = None,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.config = config.resolved()
        if not self.config.endpoint:
            raise ValueError("remote backend needs an endpoint (config or REASON_ENDPOINT)")
        self.session = session or requests.Session()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, self.config.max_in_flight))

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = self.config.api_key
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, payload: dict[str, Any]) -> str:
        """POST with ``retries`` extra attempts on transport errors and 5xx/429."""
        attempts = self.config.retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.config.backoff_s * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self.session.post(self.config.endpoint, json=payload,
                                             headers=self._headers(),
                                             timeout=self.config.timeout_s)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last = exc
                log.warning("attempt %d/%d failed: %s", attempt + 1, attempts, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = RuntimeError(f"HTTP {resp.status_code}")
                log.warning("attempt %d/%d got HTTP %d", attempt + 1, attempts, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
            except ValueError as exc:
                raise UnparseableResponse(f"response body is not JSON: {exc}") from exc
            return response_text(body)
        raise BackendUnavailable(f"{self.config.endpoint} unreachable after {attempts} "
                                 f"attempts: {last}")

    def diagnose(self, markset: MarkSet, ctx: RuntimeContext) -> list[DefectReport]:
        bundle = serialize_prompt(markset.mapping, ctx, markset.marked_image)
        text = self.complete(build_request(bundle, self.config.model or "default"))
        return parse_model_output(text, markset)
