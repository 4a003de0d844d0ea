from __future__ import annotations

import json
from pathlib import Path

import pytest

TINY_OVERRIDES = {
    "train_overrides": {"learning_rate": 0.02, "epochs": 2},
    "gbdt_overrides": {"n_rounds": 5},
}


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small synthetic splits shared by the pipeline tests."""
    from synthgen import write_synthetic_dataset

    root = tmp_path_factory.mktemp("tinydata")
    paths = write_synthetic_dataset(root, n_train=80, n_val=30, n_test=30, dim=24, seed=5)
    config = json.loads(Path(paths["config"]).read_text(encoding="utf-8"))
    config.update(TINY_OVERRIDES)
    Path(paths["config"]).write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return paths


@pytest.fixture
def write_tsv(tmp_path):
    """Write corpus rows (id, text, labels) to a temp TSV with header."""

    def _write(rows, name="corpus.tsv", header="id\ttext\tlabels"):
        path = tmp_path / name
        lines = [header] + ["\t".join(r) for r in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
