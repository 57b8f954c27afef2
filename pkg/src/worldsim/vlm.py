"""Provider-agnostic multimodal chat client with record/replay support.

Every pipeline call is single-shot: one request bundle in, one text response
out. The replay backend serves stored responses keyed by a stable request
digest, so a full pipeline run can execute with zero network operations.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np
from PIL import Image

from .prompts import PromptBundle

log = logging.getLogger(__name__)


class VlmError(RuntimeError):
    pass


class ReplayMissError(VlmError):
    pass


class AuthenticationError(VlmError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    bundle: PromptBundle
    model_id: str
    temperature: float = 1.0
    max_output: int = 65536
    sample_index: int = 0

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise ValueError("temperature must be finite and >= 0")
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: dict[str, int] = field(default_factory=dict)
    latency_ms: int = 0


@dataclass(frozen=True)
class Transcript:
    request_digest: str
    response: ChatResponse


def image_bytes(image: np.ndarray) -> bytes:
    """Raw array bytes in a canonical layout (shape and dtype prefixed)."""
    arr = np.ascontiguousarray(image)
    header = f"{arr.dtype.str}:{arr.shape}".encode()
    return header + b"\x00" + arr.tobytes()


def request_digest(request: ChatRequest) -> str:
    """Stable, order-sensitive hash of the request.

    Covers the bundle's text parts, image content digests, model id,
    temperature, and sample index. Image bytes are hashed directly, never
    re-encoded, so the digest is platform independent.
    """
    h = hashlib.sha256()
    payload = {
        "model_id": request.model_id,
        "temperature": repr(float(request.temperature)),
        "sample_index": request.sample_index,
        "purpose": request.bundle.purpose,
    }
    h.update(json.dumps(payload, sort_keys=True).encode())
    for part in request.bundle.parts:
        if part.text is not None:
            h.update(b"\x01text\x00" + part.role.encode() + b"\x00" + part.text.encode())
        else:
            img_sha = hashlib.sha256(image_bytes(part.image)).hexdigest()
            h.update(b"\x02image\x00" + part.role.encode() + b"\x00" + img_sha.encode())
    return h.hexdigest()


class TranscriptStore:
    """One JSON file per digest under transcripts/, images under blobs/.

    Writes are atomic (temp file + rename); safe for concurrent recorders.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    @property
    def transcript_dir(self) -> Path:
        return self.root / "transcripts"

    @property
    def blob_dir(self) -> Path:
        return self.root / "blobs"

    def _path(self, digest: str) -> Path:
        return self.transcript_dir / f"{digest}.json"

    def get(self, digest: str) -> ChatResponse | None:
        path = self._path(digest)
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        resp = data["response"]
        return ChatResponse(
            text=resp["text"],
            usage=dict(resp.get("usage", {})),
            latency_ms=int(resp.get("latency_ms", 0)),
        )

    def put(self, request: ChatRequest, response: ChatResponse) -> Transcript:
        digest = request_digest(request)
        with self._lock:
            self.transcript_dir.mkdir(parents=True, exist_ok=True)
            path = self._path(digest)
            if path.exists():
                log.warning("overwriting transcript for digest %s", digest)
            blob_refs = []
            for part in request.bundle.parts:
                if part.image is not None:
                    blob_refs.append(self._store_blob(part.image))
            record = {
                "digest": digest,
                "model_id": request.model_id,
                "temperature": request.temperature,
                "sample_index": request.sample_index,
                "purpose": request.bundle.purpose,
                "text_parts": [p.text for p in request.bundle.parts if p.text is not None],
                "image_blobs": blob_refs,
                "response": {
                    "text": response.text,
                    "usage": response.usage,
                    "latency_ms": response.latency_ms,
                },
            }
            _atomic_write_text(path, json.dumps(record, indent=2, sort_keys=True))
        return Transcript(digest, response)

    def _store_blob(self, image: np.ndarray) -> str:
        sha = hashlib.sha256(image_bytes(image)).hexdigest()
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        path = self.blob_dir / f"{sha}.png"
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            Image.fromarray(image).save(tmp, format="PNG")
            os.replace(tmp, path)
        return sha

    def __len__(self) -> int:
        if not self.transcript_dir.is_dir():
            return 0
        return sum(1 for _ in self.transcript_dir.glob("*.json"))


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class VlmClient:
    """Interface: complete(request) -> ChatResponse."""

    def complete(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class ReplayClient(VlmClient):
    """Serves recorded responses; zero network activity by construction."""

    def __init__(self, store: TranscriptStore):
        self.store = store

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = request_digest(request)
        response = self.store.get(digest)
        if response is None:
            raise ReplayMissError(f"replay miss: {digest}")
        return response


class RecordingClient(VlmClient):
    """Wraps another client and persists every transcript it produces."""

    def __init__(self, inner: VlmClient, store: TranscriptStore):
        self.inner = inner
        self.store = store

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        self.store.put(request, response)
        return response


class ScriptedClient(VlmClient):
    """Returns canned responses in order; handy for building replay stores."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(request)
            if not self._responses:
                raise VlmError("scripted client exhausted")
            text = self._responses.pop(0)
        return ChatResponse(text=text, usage={"output_tokens": len(text.split())})


class LiveClient(VlmClient):
    """HTTP chat backend with exponential backoff on transient failures.

    The wire format is a minimal JSON chat payload; adapting to a specific
    provider is a matter of overriding ``build_payload``/``parse_response``.
    Credentials come from the environment and are never logged.
    """

    TRANSIENT_STATUS = {408, 429, 500, 502, 503, 504}

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "WORLDSIM_API_KEY",
        retry_attempts: int = 5,
        retry_base_s: float = 1.0,
        timeout_s: float = 600.0,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        if not endpoint:
            raise ValueError("live backend requires an endpoint URL")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.retry_attempts = retry_attempts
        self.retry_base_s = retry_base_s
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def _api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise AuthenticationError(
                f"no credentials: set the {self.api_key_env} environment variable"
            )
        return key

    def build_payload(self, request: ChatRequest) -> dict:
        parts = []
        for part in request.bundle.parts:
            if part.text is not None:
                parts.append({"role": part.role, "type": "text", "text": part.text})
            else:
                import base64
                import io

                buf = io.BytesIO()
                Image.fromarray(part.image).save(buf, format="PNG")
                parts.append(
                    {
                        "role": part.role,
                        "type": "image",
                        "png_base64": base64.b64encode(buf.getvalue()).decode(),
                    }
                )
        return {
            "model": request.model_id,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output,
            "parts": parts,
        }

    def parse_response(self, data: dict) -> ChatResponse:
        return ChatResponse(
            text=data["text"],
            usage=dict(data.get("usage", {})),
            latency_ms=int(data.get("latency_ms", 0)),
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        payload = self.build_payload(request)
        last_error: Exception | None = None
        for attempt in range(self.retry_attempts):
            if attempt:
                self._sleep(self.retry_base_s * 2 ** (attempt - 1))
            start = time.monotonic()
            try:
                resp = self._client.post(self.endpoint, json=payload, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = exc
                log.warning("vlm request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthenticationError(f"authentication failed ({resp.status_code})")
            if resp.status_code in self.TRANSIENT_STATUS:
                last_error = VlmError(f"transient status {resp.status_code}")
                log.warning("vlm transient status %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            resp.raise_for_status()
            parsed = self.parse_response(resp.json())
            latency = parsed.latency_ms or int((time.monotonic() - start) * 1000)
            return ChatResponse(parsed.text, parsed.usage, latency)
        raise VlmError(f"retries exhausted after {self.retry_attempts} attempts: {last_error}")


def client_from_config(model_cfg, store_root: str | Path | None = None) -> VlmClient:
    """Build the configured client; replay by default, optionally recording."""
    store = TranscriptStore(store_root or model_cfg.transcript_dir)
    if model_cfg.backend == "replay":
        return ReplayClient(store)
    if model_cfg.backend == "live":
        client: VlmClient = LiveClient(
            endpoint=model_cfg.endpoint,
            api_key_env=model_cfg.api_key_env,
            retry_attempts=model_cfg.retry_attempts,
            retry_base_s=model_cfg.retry_base_s,
        )
        if model_cfg.record:
            client = RecordingClient(client, store)
        return client
    raise ValueError(f"unknown vlm backend {model_cfg.backend!r}")
