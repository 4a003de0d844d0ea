from __future__ import annotations

from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "word", "words", "post", "text", "hello", "##s", ".", "#", "1", "2",
]


def _build_encoder(out_dir: Path, hidden_size: int, seed: int = 1234) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_file = out_dir / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab_file=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=hidden_size,
        num_hidden_layers=1,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=512,
    )
    torch.manual_seed(seed)
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(out_dir)
    model.save_pretrained(out_dir)
    return str(out_dir)


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """Local 768-hidden single-layer encoder; no network needed."""
    return _build_encoder(tmp_path_factory.mktemp("enc768"), hidden_size=768)


@pytest.fixture(scope="session")
def narrow_encoder(tmp_path_factory):
    """Encoder with the wrong hidden size, for the dim guard."""
    return _build_encoder(tmp_path_factory.mktemp("enc64"), hidden_size=64)


@pytest.fixture
def write_tsv(tmp_path):
    def _write(rows, name="corpus.tsv"):
        path = tmp_path / name
        lines = ["id\ttext\tlabels"] + ["\t".join(r) for r in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return _write
