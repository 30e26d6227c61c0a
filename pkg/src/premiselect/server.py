"""Premise retrieval service: JSON over HTTP with a snapshot embedding cache.

Endpoints:

* ``POST /retrieve`` -- embed a state, overlay any new premises, return the
  top-k candidates. Request fields: ``state``, ``k``, ``corpus_snapshot_id``,
  optional ``candidate_names`` (else derived from ``module``/``decl_index``,
  else the whole library), ``new_premises`` (list of ``{name, signature}``),
  ``selector`` (``neural`` or ``mepo``).
* ``POST /snapshots`` -- upload a corpus as inline JSONL, warm its embedding
  cache, return its snapshot id.
* ``GET /health`` -- liveness plus cache counters.

Errors come back as ``{"error": code, "detail": str}``. Limits: request
bodies over 4 MB and more than 10k new premises per request are rejected.
Premise signatures are embedded at most once per server process: snapshots
cache the library, a signature-hash cache covers uploaded premises.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, CorpusError, PremiseRecord, accessible_premises, filter_premises, parse_corpus
from .encoder import Embedding, EncoderModel, encode
from .index import (
    DeltaOverlay,
    DuplicatePremiseError,
    IndexSnapshot,
    UnknownNameError,
    apply_delta,
    build_snapshot,
    select_premises,
)
from .mepo import MepoConfig
from .selectors import mepo_selector

logger = logging.getLogger(__name__)

ADDR_ENV_VAR = "PREMISELECT_ADDR"
DEFAULT_ADDR = "127.0.0.1:8777"
MAX_BODY_BYTES = 4 * 1024 * 1024
MAX_NEW_PREMISES = 10_000


class RequestError(Exception):
    """Maps straight onto an HTTP error response."""

    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}")


@dataclass(frozen=True)
class _Entry:
    corpus: Corpus
    snapshot: IndexSnapshot


class PremiseService:
    """Request handling and caching, independent of the HTTP transport."""

    def __init__(
        self,
        model: EncoderModel,
        *,
        mepo_config: MepoConfig = MepoConfig(),
        max_body_bytes: int = MAX_BODY_BYTES,
        max_new_premises: int = MAX_NEW_PREMISES,
    ):
        self.model = model
        self.mepo_config = mepo_config
        self.max_body_bytes = max_body_bytes
        self.max_new_premises = max_new_premises
        self._registry: dict[str, _Entry] = {}
        self._embed_cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self.stats = {
            "premise_embeds": 0,
            "premise_cache_hits": 0,
            "state_embeds": 0,
            "snapshot_builds": 0,
        }

    # -- cache management ---------------------------------------------------

    def warm_cache(self, corpus: Corpus) -> str:
        """Build and register the snapshot for a corpus; idempotent per id."""
        snap_id = corpus.snapshot_id
        with self._lock:
            if snap_id in self._registry:
                return snap_id
        snapshot = build_snapshot(self.model, corpus)
        with self._lock:
            if snap_id not in self._registry:
                self._registry[snap_id] = _Entry(corpus=corpus, snapshot=snapshot)
                self.stats["snapshot_builds"] += 1
                self.stats["premise_embeds"] += len(snapshot)
        return snap_id

    def snapshot_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._registry)

    def _embed_cached(self, model: EncoderModel, signature: str) -> Embedding:
        key = hashlib.sha256(signature.encode("utf-8")).hexdigest()
        with self._lock:
            vec = self._embed_cache.get(key)
        if vec is not None:
            self.stats["premise_cache_hits"] += 1
            return Embedding(vector=vec, model_version=model.version)
        emb = encode(model, signature)
        with self._lock:
            self._embed_cache[key] = emb.vector  # last writer wins, values identical
            self.stats["premise_embeds"] += 1
        return emb

    # -- request handlers ----------------------------------------------------

    def health(self) -> dict:
        return {
            "status": "ok",
            "model_version": self.model.version,
            "snapshots": self.snapshot_ids(),
            "stats": dict(self.stats),
        }

    def handle_snapshots(self, payload: Mapping) -> dict:
        jsonl = payload.get("jsonl")
        if not isinstance(jsonl, str) or not jsonl.strip():
            raise RequestError(400, "malformed_request", "snapshots upload needs a 'jsonl' string")
        try:
            corpus = parse_corpus(jsonl.splitlines())
        except CorpusError as exc:
            raise RequestError(400, "invalid_corpus", str(exc)) from exc
        if payload.get("filtered", True):
            corpus = filter_premises(corpus)
        start = time.monotonic()
        snap_id = self.warm_cache(corpus)
        return {
            "corpus_snapshot_id": snap_id,
            "num_premises": len(corpus.premises),
            "num_states": len(corpus.states),
            "warm_ms": (time.monotonic() - start) * 1000.0,
        }

    def handle_retrieve(self, payload: Mapping) -> dict:
        t_start = time.monotonic()
        state_text = payload.get("state")
        if not isinstance(state_text, str):
            raise RequestError(400, "malformed_request", "'state' must be a string")
        k = payload.get("k")
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise RequestError(400, "malformed_request", "'k' must be a positive integer")
        selector = payload.get("selector", "neural")
        if selector not in ("neural", "mepo"):
            raise RequestError(400, "malformed_request", f"unknown selector {selector!r}")
        snap_id = payload.get("corpus_snapshot_id")
        if not isinstance(snap_id, str):
            raise RequestError(400, "malformed_request", "'corpus_snapshot_id' must be a string")
        with self._lock:
            entry = self._registry.get(snap_id)
        if entry is None:
            raise RequestError(404, "unknown_snapshot", f"no snapshot {snap_id!r}; sync with POST /snapshots")

        new_premises = self._parse_new_premises(payload.get("new_premises", []))
        candidates = self._candidate_pool(payload, entry, [p.name for p in new_premises])

        t_embed = time.monotonic()
        state_emb = encode(self.model, state_text)
        self.stats["state_embeds"] += 1
        try:
            overlay = apply_delta(entry.snapshot, new_premises, self.model, encode_fn=self._embed_cached)
        except DuplicatePremiseError as exc:
            raise RequestError(400, "premise_conflict", str(exc)) from exc
        embed_ms = (time.monotonic() - t_embed) * 1000.0

        t_search = time.monotonic()
        if selector == "neural":
            try:
                result = select_premises(state_emb, k, candidates, entry.snapshot, overlay)
            except UnknownNameError as exc:
                raise RequestError(400, "unknown_name", f"candidate {exc.args[0]!r} is not indexed") from exc
            ranked = [{"name": name, "score": score} for name, score in result.ranked]
        else:
            ranked = self._mepo_ranked(entry, new_premises, state_text, candidates, k)
        search_ms = (time.monotonic() - t_search) * 1000.0

        return {
            "ranked": ranked,
            "model_version": self.model.version,
            "timings": {
                "embed_ms": embed_ms,
                "search_ms": search_ms,
                "total_ms": (time.monotonic() - t_start) * 1000.0,
            },
        }

    def _parse_new_premises(self, raw: object) -> list[PremiseRecord]:
        if not isinstance(raw, list):
            raise RequestError(400, "malformed_request", "'new_premises' must be a list")
        if len(raw) > self.max_new_premises:
            raise RequestError(
                413, "request_too_large",
                f"{len(raw)} new premises exceed the limit of {self.max_new_premises}",
            )
        records = []
        for i, obj in enumerate(raw):
            if not isinstance(obj, dict) or not isinstance(obj.get("name"), str) or not isinstance(obj.get("signature"), str):
                raise RequestError(400, "malformed_request", f"new_premises[{i}] needs string 'name' and 'signature'")
            records.append(
                PremiseRecord(
                    name=obj["name"],
                    kind="theorem",
                    signature=obj["signature"],
                    docstring=None,
                    module="<client>",
                    decl_index=i,
                )
            )
        return records

    def _candidate_pool(self, payload: Mapping, entry: _Entry, new_names: Sequence[str]) -> list[str]:
        explicit = payload.get("candidate_names")
        if explicit is not None:
            if not isinstance(explicit, list) or not all(isinstance(n, str) for n in explicit):
                raise RequestError(400, "malformed_request", "'candidate_names' must be a list of strings")
            pool = list(explicit)
        elif payload.get("module") is not None:
            module = payload.get("module")
            decl_index = payload.get("decl_index")
            if not isinstance(module, str) or not isinstance(decl_index, int):
                raise RequestError(400, "malformed_request", "module derivation needs 'module' and integer 'decl_index'")
            try:
                pool = accessible_premises(entry.corpus, module, decl_index)
            except CorpusError as exc:
                raise RequestError(400, "unknown_module", str(exc)) from exc
        else:
            pool = list(entry.snapshot.names)
        return list(dict.fromkeys([*pool, *new_names]))

    def _mepo_ranked(
        self,
        entry: _Entry,
        new_premises: Sequence[PremiseRecord],
        state_text: str,
        candidates: Sequence[str],
        k: int,
    ) -> list[dict]:
        signatures = {p.name: p.signature for p in entry.corpus.premises}
        signatures.update({p.name: p.signature for p in new_premises})
        missing = [n for n in candidates if n not in signatures]
        if missing:
            raise RequestError(400, "unknown_name", f"candidate {missing[0]!r} is not indexed")
        select = mepo_selector(signatures, self.mepo_config)
        names = select(state_text, candidates, k)
        # Rank-based scores: the filter yields an order, not a similarity.
        return [
            {"name": name, "score": (len(names) - i) / len(names)}
            for i, name in enumerate(names)
        ]


class _Handler(BaseHTTPRequestHandler):
    service: PremiseService  # set by make_http_server

    def log_message(self, fmt: str, *args) -> None:  # route through logging, not stderr
        logger.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_json(self) -> Mapping:
        length = int(self.headers.get("Content-Length", 0))
        if length > self.service.max_body_bytes:
            raise RequestError(413, "request_too_large", f"body of {length} bytes exceeds {self.service.max_body_bytes}")
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RequestError(400, "malformed_request", f"body is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise RequestError(400, "malformed_request", "body must be a JSON object")
        return payload

    def do_GET(self) -> None:
        if self.path == "/health":
            self._send(200, self.service.health())
        else:
            self._send(404, {"error": "not_found", "detail": f"no route {self.path!r}"})

    def do_POST(self) -> None:
        try:
            payload = self._read_json()
            if self.path == "/retrieve":
                self._send(200, self.service.handle_retrieve(payload))
            elif self.path == "/snapshots":
                self._send(200, self.service.handle_snapshots(payload))
            else:
                self._send(404, {"error": "not_found", "detail": f"no route {self.path!r}"})
        except RequestError as exc:
            self._send(exc.status, {"error": exc.code, "detail": exc.detail})
        except Exception:  # pragma: no cover - defensive
            logger.exception("unhandled error for %s", self.path)
            self._send(500, {"error": "internal_error", "detail": "unhandled server error"})


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host, int(port)


def resolve_addr(addr: str | None) -> tuple[str, int]:
    """CLI flag wins, then the PREMISELECT_ADDR env var, then the default."""
    return parse_addr(addr or os.environ.get(ADDR_ENV_VAR) or DEFAULT_ADDR)


def make_http_server(service: PremiseService, host: str, port: int) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve(service: PremiseService, addr: str | None = None) -> None:
    host, port = resolve_addr(addr)
    server = make_http_server(service, host, port)
    logger.info("serving on %s:%d (model %s)", host, port, service.model.version[:12])
    try:
        server.serve_forever()
    finally:
        server.server_close()
