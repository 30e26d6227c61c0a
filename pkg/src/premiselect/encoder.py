"""Lightweight trainable text encoder with exact analytic gradients.

The model is deliberately small: token embeddings, mean pooling, one linear
projection, L2 normalization. That keeps every gradient checkable against
finite differences while exercising the same training/retrieval contracts a
transformer encoder would. All arithmetic is float64 for test determinism.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CHECKPOINT_FORMAT = "premiselect-encoder-v1"

UNK_ID = 0
EMPTY_ID = 1
_RESERVED_ROWS = 2

_TOKEN_RE = re.compile(r"[A-Za-z0-9_']+|[^\sA-Za-z0-9_']")


class VersionMismatchError(ValueError):
    """Embeddings from different model versions were combined."""


class CheckpointError(ValueError):
    """A model checkpoint file is malformed."""


def lex(text: str) -> list[str]:
    """Split text into string tokens.

    Identifier runs (letters, digits, underscore, prime) are lowercased;
    every other non-whitespace character is its own token, so dotted names
    like ``GCDMonoid.gcd`` become ``[gcdmonoid, ., gcd]``.
    """
    return [t.lower() if t[0].isalnum() or t[0] in "_'" else t for t in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class Tokenizer:
    """Deterministic vocabulary lookup. Unknown tokens map to ``unk_id``."""

    vocab: dict[str, int]
    max_len: int = 256
    unk_id: int = UNK_ID
    empty_id: int = EMPTY_ID

    def tokenize(self, text: str) -> list[int]:
        tokens = lex(text)[: self.max_len]
        return [self.vocab.get(t, self.unk_id) for t in tokens]

    def is_truncated(self, text: str) -> bool:
        return len(lex(text)) > self.max_len

    @property
    def num_rows(self) -> int:
        return _RESERVED_ROWS + len(self.vocab)


def build_tokenizer(texts: Iterable[str], *, max_len: int = 256, min_freq: int = 1) -> Tokenizer:
    """Build a vocabulary from a text collection, most frequent tokens first."""
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(lex(text))
    ordered = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    vocab = {t: _RESERVED_ROWS + i for i, t in enumerate(ordered)}
    return Tokenizer(vocab=vocab, max_len=max_len)


@dataclass(frozen=True)
class EncoderModel:
    """Immutable encoder parameters. ``version`` content-addresses them."""

    tokenizer: Tokenizer
    embedding_table: np.ndarray  # (num_rows, d)
    projection: np.ndarray  # (d, d)
    version: str

    @property
    def dim(self) -> int:
        return int(self.embedding_table.shape[1])

    @classmethod
    def create(cls, tokenizer: Tokenizer, embedding_table: np.ndarray, projection: np.ndarray) -> "EncoderModel":
        embedding_table = np.ascontiguousarray(embedding_table, dtype=np.float64)
        projection = np.ascontiguousarray(projection, dtype=np.float64)
        if embedding_table.shape[0] != tokenizer.num_rows:
            raise ValueError(
                f"embedding table has {embedding_table.shape[0]} rows, "
                f"tokenizer expects {tokenizer.num_rows}"
            )
        if projection.shape != (embedding_table.shape[1],) * 2:
            raise ValueError(f"projection must be square {embedding_table.shape[1]}x, got {projection.shape}")
        version = hash_parameters(tokenizer, embedding_table, projection)
        return cls(tokenizer, embedding_table, projection, version)


def hash_parameters(tokenizer: Tokenizer, embedding_table: np.ndarray, projection: np.ndarray) -> str:
    h = hashlib.sha256()
    meta = {
        "vocab": sorted(tokenizer.vocab.items(), key=lambda kv: kv[1]),
        "max_len": tokenizer.max_len,
        "shape": list(embedding_table.shape),
    }
    h.update(json.dumps(meta, ensure_ascii=False).encode("utf-8"))
    h.update(np.ascontiguousarray(embedding_table, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(projection, dtype=np.float64).tobytes())
    return h.hexdigest()


def init_model(tokenizer: Tokenizer, dim: int = 64, seed: int = 0) -> EncoderModel:
    """Random embeddings (scaled normal), identity projection."""
    rng = np.random.default_rng(seed)
    table = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(tokenizer.num_rows, dim))
    return EncoderModel.create(tokenizer, table, np.eye(dim))


@dataclass(frozen=True)
class Embedding:
    """A unit-norm vector tagged with the producing model version."""

    vector: np.ndarray
    model_version: str


def _forward(model: EncoderModel, ids: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (pooled, projected, normalized) activations for one id sequence."""
    if not ids:
        ids = [model.tokenizer.empty_id]
    rows = model.embedding_table[np.asarray(ids, dtype=np.intp)]
    pooled = rows.mean(axis=0)
    projected = pooled @ model.projection
    norm = float(np.linalg.norm(projected))
    if norm == 0.0:
        raise ValueError("degenerate parameters: projected vector has zero norm")
    return pooled, projected, projected / norm


def encode(model: EncoderModel, text: str) -> Embedding:
    """Embed text: mean token embedding, projection, L2 normalization.

    Empty token sequences are encoded through a dedicated learned token, so
    there is no normalization singularity at the zero vector.
    """
    _, _, out = _forward(model, model.tokenizer.tokenize(text))
    return Embedding(vector=out, model_version=model.version)


def encode_batch(model: EncoderModel, texts: Sequence[str]) -> np.ndarray:
    """Stack ``encode`` outputs into an (n, d) matrix."""
    out = np.empty((len(texts), model.dim))
    for i, text in enumerate(texts):
        out[i] = encode(model, text).vector
    return out


def similarity(a: Embedding, b: Embedding) -> float:
    """Cosine similarity. Inputs are unit-norm, so this is the dot product."""
    if a.model_version != b.model_version:
        raise VersionMismatchError(
            f"embeddings come from different models: {a.model_version[:12]} vs {b.model_version[:12]}"
        )
    return float(np.clip(np.dot(a.vector, b.vector), -1.0, 1.0))


@dataclass
class ParamGrads:
    """Gradient accumulator matching the model's parameter shapes."""

    embedding_table: np.ndarray
    projection: np.ndarray

    @classmethod
    def zeros_like(cls, model: EncoderModel) -> "ParamGrads":
        return cls(np.zeros_like(model.embedding_table), np.zeros_like(model.projection))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.embedding_table**2) + np.sum(self.projection**2)))


def accumulate_grads(
    model: EncoderModel,
    ids: Sequence[int],
    upstream: np.ndarray,
    grads: ParamGrads,
) -> None:
    """Backpropagate ``upstream`` (d/d output) for one text into ``grads``.

    Exact analytic gradients: d_projected = (g - y (y.g)) / |projected|,
    d_pooled = P @ d_projected, d_P = outer(pooled, d_projected), and the
    pooled gradient is split evenly over the token rows (duplicates add).
    """
    if not ids:
        ids = [model.tokenizer.empty_id]
    pooled, projected, out = _forward(model, ids)
    norm = float(np.linalg.norm(projected))
    d_projected = (upstream - out * float(np.dot(out, upstream))) / norm
    grads.projection += np.outer(pooled, d_projected)
    d_pooled = model.projection @ d_projected
    per_token = d_pooled / len(ids)
    np.add.at(grads.embedding_table, np.asarray(ids, dtype=np.intp), per_token)


def encode_batch_with_grads(
    model: EncoderModel,
    texts: Sequence[str],
    upstream_grads: Sequence[np.ndarray],
) -> ParamGrads:
    """Exact parameter gradients of encoder outputs contracted with upstreams.

    Duplicate texts accumulate additively, so the result equals the sum of
    per-text gradients.
    """
    if len(texts) != len(upstream_grads):
        raise ValueError(f"{len(texts)} texts but {len(upstream_grads)} upstream gradients")
    grads = ParamGrads.zeros_like(model)
    for text, upstream in zip(texts, upstream_grads):
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (model.dim,):
            raise ValueError(f"upstream gradient shape {upstream.shape} != ({model.dim},)")
        accumulate_grads(model, model.tokenizer.tokenize(text), upstream, grads)
    return grads


def with_parameters(model: EncoderModel, embedding_table: np.ndarray, projection: np.ndarray, version: str) -> EncoderModel:
    """Cheap parameter swap for training loops (caller supplies the version tag)."""
    return replace(model, embedding_table=embedding_table, projection=projection, version=version)


def _pack(array: np.ndarray) -> dict:
    data = np.ascontiguousarray(array, dtype=np.float64)
    return {
        "shape": list(data.shape),
        "dtype": "<f8",
        "data": base64.b64encode(data.astype("<f8").tobytes()).decode("ascii"),
    }


def _unpack(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype=obj["dtype"]).reshape(obj["shape"]).astype(np.float64)


def save_model(model: EncoderModel, path: str | Path) -> None:
    """Write a JSON checkpoint; parameters are base64 so round-trips are bitwise."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": model.version,
        "max_len": model.tokenizer.max_len,
        "vocab": model.tokenizer.vocab,
        "embedding_table": _pack(model.embedding_table),
        "projection": _pack(model.projection),
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")


def load_model(path: str | Path) -> EncoderModel:
    """Load a checkpoint, verifying the stored content hash."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"not a JSON checkpoint: {exc.msg}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {doc.get('format')!r}")
    tokenizer = Tokenizer(vocab={str(k): int(v) for k, v in doc["vocab"].items()}, max_len=int(doc["max_len"]))
    model = EncoderModel.create(tokenizer, _unpack(doc["embedding_table"]), _unpack(doc["projection"]))
    if model.version != doc.get("version"):
        raise CheckpointError("checkpoint hash mismatch: file was corrupted or edited")
    return model
