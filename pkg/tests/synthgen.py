"""Synthetic corpus + embedding fixtures with a planted class signal.

Embeddings are built from five near-orthogonal directions: one carries
the hostile / non-hostile sign, the other four are added per hostile
label. Clusters are tight, so any sane classifier separates them.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hostility import corpus as corpus_io
from hostility.corpus import HOSTILE_NAMES, LabelVector
from hostility.embeddings import EmbeddingStore, write_store

_WORDS = ("नमूना", "पाठ", "पोस्ट", "शब्द", "विषय", "चर्चा")


def sample_label_bits(rng: np.random.Generator) -> tuple[int, ...]:
    if rng.random() < 0.5:
        return (1, 0, 0, 0, 0)
    k = int(rng.integers(1, 3))
    picks = rng.choice(4, size=k, replace=False)
    bits = [0, 0, 0, 0, 0]
    for c in picks:
        bits[c + 1] = 1
    return tuple(bits)


def planted_embedding(rng, bits, directions, scale=4.0, noise=0.25):
    sign = -1.0 if bits[0] == 1 else 1.0
    x = sign * scale * directions[0]
    for c in range(4):
        if bits[c + 1]:
            x = x + scale * directions[c + 1]
    return x + noise * rng.standard_normal(directions.shape[1])


def make_split(rng, split: str, n: int, dim: int, directions, id_prefix: str):
    posts = []
    vectors = np.empty((n, dim), dtype=np.float32)
    for i in range(n):
        bits = sample_label_bits(rng)
        words = " ".join(rng.choice(_WORDS, size=4))
        raw = f"{words} #{id_prefix}{i}"
        if i % 17 == 0:
            raw += " https://example.invalid/x"
        labels = LabelVector(bits)
        posts.append(
            corpus_io.LabeledPost(
                id=f"{id_prefix}{i}",
                raw_text=raw,
                clean_text=corpus_io.preprocess_post(raw),
                labels=labels,
            )
        )
        vectors[i] = planted_embedding(rng, bits, directions)
    return corpus_io.Corpus(split=split, posts=tuple(posts)), vectors


def write_synthetic_dataset(
    root,
    n_train: int = 600,
    n_val: int = 200,
    n_test: int = 200,
    dim: int = 768,
    seed: int = 7,
) -> dict:
    """Write train/validation/test TSVs + EMB1 stores + a run config.

    Returns the path map; the config's learning rate is raised above the
    production default so a handful of epochs is enough on easy data.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((dim, 5))
    directions, _ = np.linalg.qr(raw)
    directions = directions.T  # 5 orthonormal rows

    paths = {}
    for split, n, prefix in (
        ("train", n_train, "tr"),
        ("validation", n_val, "va"),
        ("test", n_test, "te"),
    ):
        corpus, vectors = make_split(rng, split, n, dim, directions, prefix)
        corpus_path = root / f"{split}.tsv"
        store_path = root / f"{split}.emb1"
        corpus_io.write_corpus(corpus, corpus_path)
        write_store(EmbeddingStore(dim, corpus.ids(), vectors), store_path)
        paths[f"{split}_corpus"] = str(corpus_path)
        paths[f"{split}_store"] = str(store_path)

    config = {
        "train_corpus": "train.tsv",
        "val_corpus": "validation.tsv",
        "test_corpus": "test.tsv",
        "train_store": "train.emb1",
        "val_store": "validation.emb1",
        "test_store": "test.emb1",
        "out_dir": "out",
        "seed": 7,
        "train_overrides": {"learning_rate": 0.01},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    paths["config"] = str(config_path)
    return paths
