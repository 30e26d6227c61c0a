"""Exact top-k cosine retrieval over cached premise embeddings.

Snapshots are immutable versioned matrices keyed by (corpus snapshot id,
model version). New premises land in a delta overlay on top of a base
snapshot, so only their signatures get embedded; retrieval over base+overlay
is guaranteed to match a from-scratch rebuild of the union corpus. Search is
an exact scan (vectorized dot products with partial selection), which at the
tens-of-thousands-of-premises scale this serves is well inside the latency
budget and keeps every ranking testable against brute force.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Corpus, PremiseRecord
from .encoder import Embedding, EncoderModel, VersionMismatchError, encode

SNAPSHOT_MAGIC = b"PSNAP001"


class UnknownNameError(KeyError):
    """A candidate mask names a premise absent from the index."""


class DuplicatePremiseError(ValueError):
    """A new premise reuses an existing name with a different signature."""


class SnapshotFormatError(ValueError):
    """A snapshot cache file is malformed."""


def _signature_hash(signature: str) -> str:
    return hashlib.sha256(signature.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class IndexSnapshot:
    """Immutable embedding matrix for one (corpus, model) version pair."""

    matrix: np.ndarray  # (n, d) unit-norm rows
    names: tuple[str, ...]
    signature_hashes: tuple[str, ...]
    corpus_snapshot_id: str
    model_version: str

    def __post_init__(self):
        if self.matrix.shape[0] != len(self.names) or len(self.names) != len(self.signature_hashes):
            raise ValueError("rows, names, and signature hashes must align")
        self.matrix.setflags(write=False)
        object.__setattr__(self, "_row_of", {n: i for i, n in enumerate(self.names)})
        if len(self._row_of) != len(self.names):
            raise ValueError("snapshot names must be distinct")

    @property
    def _rows(self) -> dict[str, int]:
        return self._row_of  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class DeltaOverlay:
    """Embeddings for premises added on top of a base snapshot."""

    base: IndexSnapshot
    extra: np.ndarray  # (m, d)
    names: tuple[str, ...]
    signature_hashes: tuple[str, ...]

    def __post_init__(self):
        if self.extra.shape[0] != len(self.names):
            raise ValueError("overlay rows and names must align")
        overlap = set(self.names) & set(self.base.names)
        if overlap:
            raise ValueError(f"overlay names collide with base: {sorted(overlap)[:3]}")
        self.extra.setflags(write=False)
        object.__setattr__(self, "_row_of", {n: i for i, n in enumerate(self.names)})

    @property
    def _rows(self) -> dict[str, int]:
        return self._row_of  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class RetrievalResult:
    """Names with cosine scores, best first; ties broken by name."""

    ranked: tuple[tuple[str, float], ...]
    k_requested: int

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.ranked)


def build_snapshot(
    model: EncoderModel,
    corpus: Corpus,
    eligible: Callable[[PremiseRecord], bool] | None = None,
) -> IndexSnapshot:
    """Embed every (eligible) premise signature into one matrix.

    ``eligible`` is a hook for deployment-specific retrieval pools; by
    default every premise in the (already filtered) corpus gets a row.
    """
    records = [p for p in corpus.premises if eligible is None or eligible(p)]
    matrix = np.empty((len(records), model.dim))
    for i, p in enumerate(records):
        matrix[i] = encode(model, p.signature).vector
    return IndexSnapshot(
        matrix=matrix,
        names=tuple(p.name for p in records),
        signature_hashes=tuple(_signature_hash(p.signature) for p in records),
        corpus_snapshot_id=corpus.snapshot_id,
        model_version=model.version,
    )


def apply_delta(
    snapshot: IndexSnapshot,
    new_premises: Sequence[PremiseRecord],
    model: EncoderModel,
    encode_fn: Callable[[EncoderModel, str], Embedding] = encode,
) -> DeltaOverlay:
    """Embed only genuinely new premises into an overlay; base stays untouched.

    Re-uploads of an identical (name, signature) pair are dropped silently;
    the same name with a different signature is an error because it would
    make base and overlay disagree about one premise.
    """
    if model.version != snapshot.model_version:
        raise VersionMismatchError(
            f"snapshot built with model {snapshot.model_version[:12]}, got {model.version[:12]}"
        )
    fresh: dict[str, PremiseRecord] = {}
    for p in new_premises:
        if p.name in snapshot._rows:
            base_hash = snapshot.signature_hashes[snapshot._rows[p.name]]
            if _signature_hash(p.signature) != base_hash:
                raise DuplicatePremiseError(
                    f"premise {p.name!r} already indexed with a different signature"
                )
            continue
        if p.name in fresh:
            if fresh[p.name].signature != p.signature:
                raise DuplicatePremiseError(
                    f"premise {p.name!r} uploaded twice with different signatures"
                )
            continue
        fresh[p.name] = p
    names = tuple(fresh)
    extra = np.empty((len(names), model.dim))
    for i, name in enumerate(names):
        extra[i] = encode_fn(model, fresh[name].signature).vector
    return DeltaOverlay(
        base=snapshot,
        extra=extra,
        names=names,
        signature_hashes=tuple(_signature_hash(fresh[n].signature) for n in names),
    )


def select_premises(
    state_embedding: Embedding,
    k: int,
    candidates: Iterable[str],
    snapshot: IndexSnapshot,
    overlay: DeltaOverlay | None = None,
) -> RetrievalResult:
    """Exact top-k by dot product over the candidate mask.

    Equivalent to scoring every candidate and fully sorting by
    (-score, name); implemented with a partial selection so only the tie
    region around the k-th score is sorted.
    """
    if state_embedding.model_version != snapshot.model_version:
        raise VersionMismatchError(
            f"query from model {state_embedding.model_version[:12]}, "
            f"snapshot from {snapshot.model_version[:12]}"
        )
    if overlay is not None and overlay.base is not snapshot:
        if overlay.base.model_version != snapshot.model_version:
            raise VersionMismatchError("overlay does not belong to this snapshot's model")

    names = list(dict.fromkeys(candidates))
    base_rows: list[int] = []
    base_names: list[str] = []
    extra_rows: list[int] = []
    extra_names: list[str] = []
    for name in names:
        row = snapshot._rows.get(name)
        if row is not None:
            base_rows.append(row)
            base_names.append(name)
        elif overlay is not None and name in overlay._rows:
            extra_rows.append(overlay._rows[name])
            extra_names.append(name)
        else:
            raise UnknownNameError(name)

    query = state_embedding.vector
    scores = np.empty(len(base_rows) + len(extra_rows))
    if base_rows:
        scores[: len(base_rows)] = snapshot.matrix[np.asarray(base_rows, dtype=np.intp)] @ query
    if extra_rows:
        scores[len(base_rows):] = overlay.extra[np.asarray(extra_rows, dtype=np.intp)] @ query
    all_names = base_names + extra_names

    n = len(all_names)
    take = min(max(k, 0), n)
    if take == 0:
        return RetrievalResult(ranked=(), k_requested=k)
    if take < n:
        kth = np.partition(scores, n - take)[n - take]
        pool = np.flatnonzero(scores >= kth)
    else:
        pool = np.arange(n)
    order = sorted(pool, key=lambda i: (-scores[i], all_names[i]))[:take]
    return RetrievalResult(
        ranked=tuple((all_names[i], float(scores[i])) for i in order),
        k_requested=k,
    )


def snapshot_cache_key(corpus_snapshot_id: str, model_version: str) -> str:
    return f"{corpus_snapshot_id[:16]}-{model_version[:16]}"


def save_snapshot(snapshot: IndexSnapshot, directory: str | Path) -> Path:
    """Write a snapshot cache file and return its path.

    Binary layout: 8-byte magic ``PSNAP001``, little-endian u32 header
    length, UTF-8 JSON header (names, signature hashes, ids, shape, dtype),
    then the raw row-major ``<f8`` matrix bytes.
    """
    header = json.dumps(
        {
            "names": list(snapshot.names),
            "signature_hashes": list(snapshot.signature_hashes),
            "corpus_snapshot_id": snapshot.corpus_snapshot_id,
            "model_version": snapshot.model_version,
            "shape": list(snapshot.matrix.shape),
            "dtype": "<f8",
        },
        ensure_ascii=False,
    ).encode("utf-8")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / (snapshot_cache_key(snapshot.corpus_snapshot_id, snapshot.model_version) + ".snap")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(snapshot.matrix, dtype="<f8").tobytes())
    return path


def load_snapshot(path: str | Path) -> IndexSnapshot:
    raw = Path(path).read_bytes()
    if raw[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError("bad magic: not a snapshot cache file")
    offset = len(SNAPSHOT_MAGIC)
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotFormatError(f"unreadable snapshot header: {exc}") from exc
    offset += header_len
    shape = tuple(header["shape"])
    expected = shape[0] * shape[1] * 8
    body = raw[offset : offset + expected]
    if len(body) != expected:
        raise SnapshotFormatError(f"truncated matrix: wanted {expected} bytes, got {len(body)}")
    matrix = np.frombuffer(body, dtype=header["dtype"]).reshape(shape).astype(np.float64)
    return IndexSnapshot(
        matrix=matrix,
        names=tuple(header["names"]),
        signature_hashes=tuple(header["signature_hashes"]),
        corpus_snapshot_id=header["corpus_snapshot_id"],
        model_version=header["model_version"],
    )
