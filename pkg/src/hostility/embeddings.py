"""Bit-exact binary container for id-aligned embedding vectors.

EMB1 file layout (little-endian throughout, no padding, no trailing bytes):

    bytes 0-3    magic ``EMB1``
    bytes 4-5    version, uint16 (currently 1)
    bytes 6-9    vector dimension, uint32
    bytes 10-13  record count, uint32
    records      id_len uint16, id_len bytes UTF-8 id, dim float32 values

Vectors are stored as IEEE-754 binary32; downstream math converts to
float64 after load.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import DimensionError, InputError, IntegrityError

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


class StoreFormatError(InputError):
    """Malformed EMB1 bytes; carries the offending byte offset."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class StoreValidationError(InputError):
    """Store contents violate an invariant (dimension, finiteness)."""


class AlignmentError(InputError):
    """Corpus ids missing from a store."""


class EmbeddingStore:
    """Ordered (id, vector) records with a fixed dimension.

    Vectors are held as float32, matching the on-disk precision, so a
    write/read cycle is bit-exact. Ids are unique.
    """

    def __init__(self, dim: int, ids, vectors):
        if dim < 1:
            raise StoreValidationError(f"dim must be positive, got {dim}")
        ids = tuple(ids)
        matrix = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
        if matrix.size == 0:
            matrix = matrix.reshape(len(ids), dim)
        if matrix.ndim != 2 or matrix.shape != (len(ids), dim):
            raise StoreValidationError(
                f"expected a {len(ids)}x{dim} matrix, got shape {matrix.shape}"
            )
        if matrix.size and not np.all(np.isfinite(matrix)):
            raise StoreValidationError("vectors contain NaN or Inf")
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate ids in store")
        self.dim = dim
        self.ids = ids
        self.vectors = matrix

    @classmethod
    def from_records(cls, dim: int, records) -> "EmbeddingStore":
        ids = [rec[0] for rec in records]
        vecs = [rec[1] for rec in records]
        for post_id, vec in zip(ids, vecs):
            if len(vec) != dim:
                raise StoreValidationError(
                    f"vector for id {post_id!r} has {len(vec)} entries, expected {dim}"
                )
        matrix = np.asarray(vecs, dtype=np.float32).reshape(len(ids), dim)
        return cls(dim, ids, matrix)

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.ids == other.ids
            and self.vectors.tobytes() == other.vectors.tobytes()
        )

    def records(self):
        for i, post_id in enumerate(self.ids):
            yield post_id, self.vectors[i]


@dataclass(frozen=True)
class AlignedDataset:
    """Row-aligned features, multi-hot labels, and ids."""

    X: np.ndarray  # (n, dim) float64
    Y: np.ndarray  # (n, 5) int64 multi-hot
    ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.ids)


def write_store(store: EmbeddingStore, path) -> None:
    """Write the EMB1 file; byte-deterministic for a given store."""
    # Invariants are enforced at construction time; encode ids first so a
    # bad id fails before any bytes hit the disk.
    encoded = []
    for post_id in store.ids:
        raw = post_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise StoreValidationError(f"id {post_id!r} exceeds 65535 UTF-8 bytes")
        encoded.append(raw)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, store.dim, len(store.ids)))
        for raw, vec in zip(encoded, store.vectors):
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.astype("<f4", copy=False).tobytes())


def read_store(path) -> EmbeddingStore:
    """Inverse of write_store; read(write(s)) equals s bit-exactly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise StoreFormatError(len(data), "truncated header")
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreFormatError(0, f"bad magic {magic!r}")
    if version != VERSION:
        raise StoreFormatError(4, f"unsupported version {version}")
    if dim < 1:
        raise StoreFormatError(6, f"dim must be positive, got {dim}")
    offset = _HEADER.size
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + 2 > len(data):
            raise StoreFormatError(offset, f"truncated record {i}: missing id length")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len > len(data):
            raise StoreFormatError(offset, f"truncated record {i}: missing id bytes")
        try:
            post_id = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise StoreFormatError(offset, f"record {i}: id is not valid UTF-8") from None
        offset += id_len
        if offset + vec_bytes > len(data):
            raise StoreFormatError(offset, f"truncated record {i}: missing vector bytes")
        rows[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
        ids.append(post_id)
    if offset != len(data):
        raise StoreFormatError(offset, f"{len(data) - offset} trailing bytes")
    if len(set(ids)) != len(ids):
        raise IntegrityError("duplicate ids in store file")
    return EmbeddingStore(dim, ids, rows)


def align(corpus: Corpus, store: EmbeddingStore, expected_dim: int | None = None) -> AlignedDataset:
    """Join corpus labels with store vectors, ordered by corpus order.

    Store records absent from the corpus are ignored; corpus ids absent
    from the store raise AlignmentError (listing up to 10 missing ids).
    """
    if not corpus.posts:
        raise InputError("corpus is empty")
    if expected_dim is not None and store.dim != expected_dim:
        raise DimensionError(f"store dim {store.dim} does not match expected {expected_dim}")
    index = {post_id: i for i, post_id in enumerate(store.ids)}
    missing = [p.id for p in corpus.posts if p.id not in index]
    if missing:
        shown = ", ".join(repr(m) for m in missing[:10])
        raise AlignmentError(f"{len(missing)} corpus ids missing from store: {shown}")
    order = [index[p.id] for p in corpus.posts]
    X = store.vectors[order].astype(np.float64)
    Y = np.array([p.labels.bits for p in corpus.posts], dtype=np.int64)
    return AlignedDataset(X=X, Y=Y, ids=corpus.ids())
