"""Frozen-encoder CLS embedding exporter (EMB1 output)."""

from .exporter import ExportJob, export_embeddings, read_corpus, write_emb1

__version__ = "0.1.0"
