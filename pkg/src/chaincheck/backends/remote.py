"""HTTP clients for hosted completion, embedding and entity-linking services.

The completion client speaks the common ``/completions`` and
``/chat/completions`` JSON shapes. The linker protocol is a small JSON
contract of our own:

* ``POST {endpoint}/link``     ``{"text": m}``  -> ``{"canonical_name", "is_person", "confidence"}``
* ``POST {endpoint}/mentions`` ``{"text": q}``  -> ``{"mentions": [{"mention", "start", ...link fields}]}``
"""

from __future__ import annotations

import logging
import time
from typing import Any, Dict, List, Optional

import httpx
import numpy as np

from chaincheck.backends.base import CompletionRequest, LinkResult, Mention, unit
from chaincheck.errors import BackendError

log = logging.getLogger(__name__)


class _JsonClient:
    thread_safe = True

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        max_retries: int = 2,
        backoff: float = 0.5,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_retries = max_retries
        self.backoff = backoff
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        url = f"{self.endpoint}/{path.lstrip('/')}"
        attempt = 0
        while True:
            try:
                resp = self._client.post(url, json=payload)
                break
            except httpx.TransportError as exc:
                if attempt >= self.max_retries:
                    raise BackendError(f"POST {url} failed: {exc}", retries=attempt) from exc
                delay = self.backoff * (2**attempt)
                log.warning("POST %s failed (%s); retry %d in %.2fs", url, exc, attempt + 1, delay)
                time.sleep(delay)
                attempt += 1
        if resp.status_code >= 300:
            raise BackendError(
                f"POST {url} returned HTTP {resp.status_code}: {resp.text[:200]}", retries=attempt
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise BackendError(f"POST {url} returned non-JSON body", retries=attempt) from exc
        if not isinstance(body, dict):
            raise BackendError(f"POST {url} returned {type(body).__name__}, expected object", attempt)
        return body


class RemoteLLM(_JsonClient):
    def __init__(self, endpoint: str, model: str, *, api: str = "completions", **kwargs):
        super().__init__(endpoint, **kwargs)
        if api not in ("completions", "chat"):
            raise ValueError(f"api must be 'completions' or 'chat', got {api!r}")
        self.model = model
        self.api = api

    def complete(self, req: CompletionRequest) -> str:
        payload: Dict[str, Any] = {
            "model": self.model,
            "temperature": req.temperature,
            "max_tokens": req.max_new_tokens,
        }
        if req.stop_sequences:
            payload["stop"] = list(req.stop_sequences)
        if self.api == "chat":
            payload["messages"] = [{"role": "user", "content": req.prompt}]
            body = self._post("chat/completions", payload)
        else:
            payload["prompt"] = req.prompt
            body = self._post("completions", payload)
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] if self.api == "chat" else choice["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {str(body)[:200]}") from exc
        if not isinstance(text, str):
            raise BackendError("completion text is not a string")
        return text


class RemoteEmbedder(_JsonClient):
    def __init__(self, endpoint: str, model: str, *, dim: Optional[int] = None, **kwargs):
        super().__init__(endpoint, **kwargs)
        self.model = model
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        body = self._post("embeddings", {"model": self.model, "input": text})
        try:
            vec = np.asarray(body["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embedding response: {str(body)[:200]}") from exc
        if vec.ndim != 1 or (self.dim is not None and vec.shape[0] != self.dim):
            raise BackendError(f"embedding has shape {vec.shape}, expected ({self.dim},)")
        try:
            return unit(vec)
        except ValueError as exc:
            raise BackendError("embedding service returned a zero vector") from exc


def _link_from(body: Dict[str, Any], fallback: str) -> LinkResult:
    try:
        conf = float(body.get("confidence", 0.0))
        name = str(body.get("canonical_name") or fallback)
        return LinkResult(name, bool(body.get("is_person", False)), conf)
    except (TypeError, ValueError) as exc:
        raise BackendError(f"malformed link response: {str(body)[:200]}") from exc


class RemoteLinker(_JsonClient):
    def link(self, mention: str) -> LinkResult:
        return _link_from(self._post("link", {"text": mention}), mention.strip())

    def find_mentions(self, text: str) -> List[Mention]:
        body = self._post("mentions", {"text": text})
        out = []
        for item in body.get("mentions", []):
            surface = str(item.get("mention", ""))
            if not surface:
                continue
            out.append(Mention(surface, int(item.get("start", 0)), _link_from(item, surface)))
        return out
