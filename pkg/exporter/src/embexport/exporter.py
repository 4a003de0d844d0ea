"""Export frozen-encoder CLS embeddings for a post corpus as an EMB1 file.

Pipeline: read the TSV corpus, strip URLs, tokenize with the encoder's
tokenizer truncated/padded to a fixed length (128 by default, special
tokens included), run the frozen encoder, take the CLS vector (last
hidden layer, position 0; optionally the pooler output), and write the
records in corpus order.

This tool is standalone: it talks to the classification pipeline only
through the corpus TSV and EMB1 byte formats.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np
import torch

EXPECTED_DIM = 768
EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1

# Same URL rule as the classification pipeline: scheme or www. prefix up
# to the next whitespace. Kept in sync via a shared test-vector file.
_URL_RE = re.compile(r"(?:https?://|www\.)\S*")
_WS_RE = re.compile(r"\s+")


class ExporterError(ValueError):
    """Base for exporter failures caused by inputs or configuration."""


class ConfigError(ExporterError):
    """Encoder/configuration mismatch (e.g. hidden size is not 768)."""


class ModelLoadError(ExporterError):
    """Encoder checkpoint could not be retrieved or loaded."""


class CorpusError(ExporterError):
    """Malformed corpus file."""


@dataclass
class ExportJob:
    corpus_path: str
    out_path: str
    model_name: str = "bert-base-multilingual-uncased"
    max_length: int = 128
    batch_size: int = 16
    device: str = "cpu"
    pooling: str = "cls"  # cls | pooler
    deterministic: bool = True

    def __post_init__(self):
        if self.max_length < 2:
            raise ConfigError(f"max_length must leave room for special tokens, got {self.max_length}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.pooling not in ("cls", "pooler"):
            raise ConfigError(f"pooling must be cls or pooler, got {self.pooling!r}")


def clean_text(raw: str) -> str:
    """Drop URL tokens, collapse whitespace, trim (identical to the pipeline rule)."""
    return _WS_RE.sub(" ", _URL_RE.sub("", raw)).strip()


def read_corpus(path) -> list[tuple[str, str]]:
    """(id, cleaned text) pairs from a header + 3-column TSV, in file order."""
    posts: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no == 1:
                continue
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 3:
                raise CorpusError(f"line {line_no}: expected 3 tab-separated fields, got {len(fields)}")
            post_id, text, _labels = fields
            if not post_id:
                raise CorpusError(f"line {line_no}: empty id")
            if post_id in seen:
                raise CorpusError(f"line {line_no}: duplicate id {post_id!r}")
            seen.add(post_id)
            posts.append((post_id, clean_text(text)))
    if not posts:
        raise CorpusError(f"{path}: no posts")
    return posts


def write_emb1(path, dim: int, records) -> None:
    """Write records as EMB1: magic, u16 version, u32 dim, u32 count, then
    (u16 id_len, id bytes, dim little-endian float32) per record."""
    encoded = []
    for post_id, vector in records:
        raw = post_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ExporterError(f"id {post_id!r} exceeds 65535 UTF-8 bytes")
        vec = np.ascontiguousarray(vector, dtype="<f4")
        if vec.shape != (dim,):
            raise ExporterError(f"id {post_id!r}: expected a {dim}-vector, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ExporterError(f"id {post_id!r}: vector contains NaN or Inf")
        encoded.append((raw, vec))
    with open(path, "wb") as fh:
        fh.write(EMB1_MAGIC)
        fh.write(struct.pack("<HII", EMB1_VERSION, dim, len(encoded)))
        for raw, vec in encoded:
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())


def load_encoder(model_name: str, device: str):
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_name)
        model = AutoModel.from_pretrained(model_name)
    except Exception as exc:  # huggingface raises several env/OS error types
        raise ModelLoadError(f"could not load encoder {model_name!r}: {exc}") from exc
    model.to(device)
    model.eval()
    return tokenizer, model


def export_embeddings(job: ExportJob) -> int:
    """Run the export; returns the number of records written."""
    if job.deterministic:
        torch.set_num_threads(1)
        torch.manual_seed(0)
    posts = read_corpus(job.corpus_path)
    tokenizer, model = load_encoder(job.model_name, job.device)

    hidden = getattr(model.config, "hidden_size", None)
    if hidden != EXPECTED_DIM:
        raise ConfigError(f"encoder hidden size {hidden} != required {EXPECTED_DIM}")

    vectors = np.empty((len(posts), EXPECTED_DIM), dtype=np.float32)
    with torch.no_grad():
        for start in range(0, len(posts), job.batch_size):
            batch = posts[start : start + job.batch_size]
            encoded = tokenizer(
                [text for _, text in batch],
                padding="max_length",
                truncation=True,
                max_length=job.max_length,
                return_tensors="pt",
            )
            encoded = {k: v.to(job.device) for k, v in encoded.items()}
            output = model(**encoded)
            if job.pooling == "pooler":
                if getattr(output, "pooler_output", None) is None:
                    raise ConfigError("encoder has no pooler output; use --pooling cls")
                cls = output.pooler_output
            else:
                cls = output.last_hidden_state[:, 0, :]
            vectors[start : start + len(batch)] = cls.cpu().numpy().astype(np.float32)

    write_emb1(job.out_path, EXPECTED_DIM, zip((pid for pid, _ in posts), vectors))
    return len(posts)
