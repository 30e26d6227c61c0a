"""Reference client for the retrieval service.

The client side owns what the service cannot know: it derives the accessible
pool for a position from its corpus files, and it caches the normalized
signatures of locally defined premises so repeat requests ship identical
payloads (which the server then never re-embeds).
"""

from __future__ import annotations

from typing import Mapping, Sequence

import requests

from .corpus import Corpus, accessible_premises, corpus_to_jsonl


class ServiceError(RuntimeError):
    """The server answered with a typed error body."""

    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(f"HTTP {status} {code}: {detail}")


def _check(response: requests.Response) -> dict:
    body = response.json()
    if response.status_code != 200:
        raise ServiceError(response.status_code, body.get("error", "unknown"), body.get("detail", ""))
    return body


def health(server_url: str, timeout: float = 10.0) -> dict:
    return _check(requests.get(f"{server_url.rstrip('/')}/health", timeout=timeout))


def announce_corpus(server_url: str, corpus: Corpus, *, filtered: bool = True, timeout: float = 120.0) -> str:
    """Upload a corpus as inline JSONL; returns the registered snapshot id."""
    body = _check(
        requests.post(
            f"{server_url.rstrip('/')}/snapshots",
            json={"jsonl": corpus_to_jsonl(corpus), "filtered": filtered},
            timeout=timeout,
        )
    )
    return body["corpus_snapshot_id"]


def retrieve(
    server_url: str,
    *,
    state: str,
    k: int,
    corpus_snapshot_id: str,
    candidate_names: Sequence[str] | None = None,
    module: str | None = None,
    decl_index: int | None = None,
    new_premises: Sequence[Mapping[str, str]] = (),
    selector: str = "neural",
    timeout: float = 60.0,
) -> dict:
    payload: dict = {
        "state": state,
        "k": k,
        "corpus_snapshot_id": corpus_snapshot_id,
        "selector": selector,
        "new_premises": list(new_premises),
    }
    if candidate_names is not None:
        payload["candidate_names"] = list(candidate_names)
    if module is not None:
        payload["module"] = module
        payload["decl_index"] = decl_index
    return _check(requests.post(f"{server_url.rstrip('/')}/retrieve", json=payload, timeout=timeout))


class ReferenceClient:
    """Corpus-aware client: collects the accessible pool per state itself."""

    def __init__(self, server_url: str, corpus: Corpus, corpus_snapshot_id: str | None = None):
        self.server_url = server_url
        self.corpus = corpus
        self.snapshot_id = corpus_snapshot_id or corpus.snapshot_id
        self._new_premises: dict[str, str] = {}  # local signature cache

    def sync(self) -> str:
        self.snapshot_id = announce_corpus(self.server_url, self.corpus, filtered=False)
        return self.snapshot_id

    def add_local_premise(self, name: str, signature: str) -> None:
        self._new_premises[name] = signature

    def retrieve_at(
        self,
        state_text: str,
        module: str,
        decl_index: int,
        k: int,
        selector: str = "neural",
    ) -> dict:
        candidates = accessible_premises(self.corpus, module, decl_index)
        return retrieve(
            self.server_url,
            state=state_text,
            k=k,
            corpus_snapshot_id=self.snapshot_id,
            candidate_names=candidates,
            new_premises=[{"name": n, "signature": s} for n, s in sorted(self._new_premises.items())],
            selector=selector,
        )
