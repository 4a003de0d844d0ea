"""Configuration-driven experiment runner for the five submissions.

One engine, five presets:

* sub1 / sub2 - coarse + fine networks on raw embeddings (5 epochs with
  dropout 0.2, 10 epochs with dropout 0.3);
* sub3 / sub4 - boosted trees over the fine-tuned representations
  extracted from the sub1 / sub2 networks;
* sub5 - the F1-weighted ensemble of the four.

Every randomized step is seeded, artifact bytes are deterministic, and a
manifest with input hashes makes each run re-runnable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import corpus as corpus_io
from . import embeddings, ensemble, gbdt, metrics, mlp
from .corpus import HOSTILE_NAMES
from .errors import InputError

SUBMISSIONS = ("sub1", "sub2", "sub3", "sub4", "sub5")

MLP_PRESETS = {
    "sub1": {"epochs": 5, "dropout_p": 0.2},
    "sub2": {"epochs": 10, "dropout_p": 0.3},
}
GBDT_SOURCE = {"sub3": "sub1", "sub4": "sub2"}
ENSEMBLE_MEMBERS = ("sub1", "sub2", "sub3", "sub4")

# Previously reported scores for the five submissions, kept for the
# side-by-side comparison view. Row order: coarse F1, defamation F1,
# fake F1, hate F1, offensive F1, weighted fine F1.
REPORTED_SCORES = {
    "validation": {
        "sub1": (0.9692, 0.2656, 0.8254, 0.4876, 0.5326, 0.58),
        "sub2": (0.9654, 0.3459, 0.8274, 0.5388, 0.5405, 0.6088),
        "sub3": (0.9692, 0.2483, 0.8217, 0.4896, 0.5631, 0.5832),
        "sub4": (0.9692, 0.3810, 0.8365, 0.5172, 0.55, 0.6149),
        "sub5": (0.9692, 0.3247, 0.8387, 0.5214, 0.5426, 0.6054),
    },
    "test": {
        "sub1": (0.9612, 0.3564, 0.7823, 0.5556, 0.578, 0.6047),
        "sub2": (0.9691, 0.3061, 0.7915, 0.4282, 0.5699, 0.566),
        "sub3": (0.9655, 0.3544, 0.8, 0.4129, 0.5816, 0.5764),
        "sub4": (0.9655, 0.4343, 0.7838, 0.525, 0.5661, 0.6088),
        "sub5": (0.9655, 0.3765, 0.7844, 0.5339, 0.5854, 0.6054),
    },
}
# Reported boosted-tree scores on validation (coarse F1, weighted fine F1)
# for raw vs fine-tuned input representations.
REPORTED_XGB_REPRESENTATIONS = {
    "raw": (0.9298, 0.3762),
    "fine_tuned": (0.9692, 0.6149),
}

_CONFIG_PATH_FIELDS = (
    "train_corpus",
    "val_corpus",
    "test_corpus",
    "train_store",
    "val_store",
    "test_store",
    "out_dir",
    "source_models_dir",
    "members_dir",
)


@dataclass
class ExperimentConfig:
    train_corpus: str
    val_corpus: str
    train_store: str
    val_store: str
    out_dir: str
    test_corpus: str | None = None
    test_store: str | None = None
    submission: str = "sub1"
    seed: int = 0
    train_overrides: dict = field(default_factory=dict)
    gbdt_overrides: dict = field(default_factory=dict)
    rep_source: str = "per-task"  # which network feeds the boosters: per-task|coarse|fine
    cascade: bool = True
    auto_deps: bool = True  # sub3/4/5 may build their source models in-process
    source_models_dir: str | None = None  # pre-trained network checkpoints for sub3/sub4
    members_dir: str | None = None  # directory holding sub1..sub4 artifacts for sub5

    def validate(self) -> None:
        if self.submission not in SUBMISSIONS:
            raise InputError(f"unknown submission {self.submission!r}; expected one of {SUBMISSIONS}")
        if self.rep_source not in ("per-task", "coarse", "fine"):
            raise InputError(f"rep_source must be per-task, coarse, or fine, got {self.rep_source!r}")
        if (self.test_corpus is None) != (self.test_store is None):
            raise InputError("test_corpus and test_store must be given together")
        for name in ("train_corpus", "val_corpus", "test_corpus", "train_store", "val_store", "test_store"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise InputError(f"{name}: no such file: {value}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        data = dict(raw)
        if base_dir is not None:
            for key in _CONFIG_PATH_FIELDS:
                if data.get(key):
                    data[key] = str((base_dir / data[key]).resolve())
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path}: invalid JSON: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)


@dataclass
class RunArtifacts:
    out_dir: str
    files: dict
    reports: dict  # split -> EvalReport
    manifest: dict


@dataclass
class _Split:
    corpus: corpus_io.Corpus
    data: embeddings.AlignedDataset


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hostile_subset(data: embeddings.AlignedDataset) -> embeddings.AlignedDataset:
    mask = data.Y[:, 1:].any(axis=1)
    if not mask.any():
        raise InputError("no hostile posts available for fine-stage training")
    ids = tuple(i for i, keep in zip(data.ids, mask) if keep)
    return embeddings.AlignedDataset(X=data.X[mask], Y=data.Y[mask], ids=ids)


def _apply_cascade(bits: np.ndarray, scores: np.ndarray) -> np.ndarray:
    return np.array(
        [ensemble.enforce_cascade(bits[j], scores[j]) for j in range(bits.shape[0])],
        dtype=np.int64,
    )


def rows_from_probs(nonhostile_p: np.ndarray, fine_p: np.ndarray, cascade: bool):
    scores = np.column_stack([nonhostile_p, fine_p])
    bits = (scores >= 0.5).astype(np.int64)
    if cascade:
        bits = _apply_cascade(bits, scores)
    return bits, scores


def write_predictions(path, ids, bits, scores) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post_id, b, s in zip(ids, bits, scores):
            row = {"id": post_id, "bits": [int(x) for x in b], "scores": [float(x) for x in s]}
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_predictions(path):
    """Read a predictions JSONL file back into (ids, bits, scores)."""
    ids, bits, scores = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                ids.append(row["id"])
                bits.append(row["bits"])
                scores.append(row["scores"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}: line {line_no}: bad prediction row: {exc}") from None
    if not ids:
        raise InputError(f"{path}: no prediction rows")
    return ids, np.asarray(bits, dtype=np.int64), np.asarray(scores, dtype=np.float64)


class _Context:
    """Caches loaded splits, trained networks, and per-submission outputs
    so reproduce_all never trains the same model twice."""

    def __init__(self, cfg: ExperimentConfig):
        cfg.validate()
        self.cfg = cfg
        self.splits: dict[str, _Split] = {}
        self._load_split("train", cfg.train_corpus, cfg.train_store)
        self._load_split("validation", cfg.val_corpus, cfg.val_store)
        if cfg.test_corpus is not None:
            self._load_split("test", cfg.test_corpus, cfg.test_store)
        self._mlps: dict[str, tuple] = {}
        self._boosters: dict[str, tuple] = {}
        self._outputs: dict[str, dict] = {}

    def _load_split(self, name: str, corpus_path, store_path) -> None:
        corpus = corpus_io.parse_corpus(corpus_path, name)
        store = embeddings.read_store(store_path)
        self.splits[name] = _Split(corpus=corpus, data=embeddings.align(corpus, store))

    @property
    def eval_splits(self) -> tuple[str, ...]:
        return ("validation", "test") if "test" in self.splits else ("validation",)

    def train_config(self, preset: str) -> mlp.TrainConfig:
        params = {**MLP_PRESETS[preset], "seed": self.cfg.seed, **self.cfg.train_overrides}
        return mlp.TrainConfig(**params)

    def gbdt_config(self) -> gbdt.GbdtConfig:
        return gbdt.GbdtConfig(**{"seed": self.cfg.seed, **self.cfg.gbdt_overrides})

    def mlp_models(self, preset: str):
        """(coarse model, fine model, coarse history, fine history) for sub1/sub2."""
        if preset not in self._mlps:
            if self.cfg.source_models_dir is not None and self.cfg.submission in GBDT_SOURCE:
                src = Path(self.cfg.source_models_dir)
                coarse, _ = mlp.load_model(src / "mlp_coarse.ckpt")
                fine, _ = mlp.load_model(src / "mlp_fine.ckpt")
                self._mlps[preset] = (coarse, fine, None, None)
            else:
                if not self.cfg.auto_deps and self.cfg.submission != preset:
                    raise InputError(
                        f"{self.cfg.submission} needs the {preset} networks; "
                        "provide source_models_dir or allow dependency builds"
                    )
                tc = self.train_config(preset)
                train = self.splits["train"].data
                val = self.splits["validation"].data
                coarse, hist_c = mlp.train_mlp(train, val, "coarse", tc)
                fine, hist_f = mlp.train_mlp(_hostile_subset(train), val, "fine", tc)
                self._mlps[preset] = (coarse, fine, hist_c, hist_f)
        return self._mlps[preset]

    def _rep_models(self, preset: str):
        coarse_mlp, fine_mlp, _, _ = self.mlp_models(preset)
        if self.cfg.rep_source == "coarse":
            return coarse_mlp, coarse_mlp
        if self.cfg.rep_source == "fine":
            return fine_mlp, fine_mlp
        return coarse_mlp, fine_mlp

    def gbdt_models(self, name: str):
        """(coarse booster, fine booster set) for sub3/sub4."""
        if name not in self._boosters:
            src_c, src_f = self._rep_models(GBDT_SOURCE[name])
            gc = self.gbdt_config()
            train = self.splits["train"].data
            Xc = mlp.extract_finetuned(src_c, train.X)
            y = train.Y[:, 1:].any(axis=1).astype(np.float64)
            coarse_booster = gbdt.fit_booster(Xc, y, gc)
            hostile = _hostile_subset(train)
            Xf = mlp.extract_finetuned(src_f, hostile.X)
            fine_set = gbdt.fit_one_vs_rest(Xf, hostile.Y[:, 1:5], gc)
            self._boosters[name] = (coarse_booster, fine_set)
        return self._boosters[name]

    def outputs(self, name: str) -> dict:
        """Per-split (bits, scores) for one submission."""
        if name in self._outputs:
            return self._outputs[name]
        result: dict[str, tuple] = {}
        if name in MLP_PRESETS:
            coarse_model, fine_model, _, _ = self.mlp_models(name)
            for split in self.eval_splits:
                X = self.splits[split].data.X
                pc = mlp.predict(coarse_model, X)
                pf = mlp.predict(fine_model, X)
                result[split] = rows_from_probs(pc[:, 0], pf, self.cfg.cascade)
        elif name in GBDT_SOURCE:
            coarse_booster, fine_set = self.gbdt_models(name)
            src_c, src_f = self._rep_models(GBDT_SOURCE[name])
            for split in self.eval_splits:
                X = self.splits[split].data.X
                p_hostile = gbdt.predict_proba(coarse_booster, mlp.extract_finetuned(src_c, X))
                Xf = mlp.extract_finetuned(src_f, X)
                pf = np.column_stack([gbdt.predict_proba(b, Xf) for b in fine_set.boosters])
                result[split] = rows_from_probs(1.0 - p_hostile, pf, self.cfg.cascade)
        elif name == "sub5":
            result = self._ensemble_outputs()
        else:
            raise InputError(f"unknown submission {name!r}")
        self._outputs[name] = result
        return result

    def _member_outputs(self) -> dict:
        """bits per member per split, from artifacts on disk when given."""
        if self.cfg.members_dir is not None:
            members = {}
            root = Path(self.cfg.members_dir)
            for member in ENSEMBLE_MEMBERS:
                per_split = {}
                for split in self.eval_splits:
                    path = root / member / f"predictions_{split}.jsonl"
                    if not path.is_file():
                        raise InputError(f"sub5: missing member predictions {path}")
                    ids, bits, scores = read_predictions(path)
                    if tuple(ids) != self.splits[split].corpus.ids():
                        raise InputError(f"sub5: {path} ids do not match the {split} corpus")
                    per_split[split] = (bits, scores)
                members[member] = per_split
            return members
        if not self.cfg.auto_deps:
            raise InputError("sub5 needs sub1-sub4 outputs; provide members_dir or allow dependency builds")
        return {member: self.outputs(member) for member in ENSEMBLE_MEMBERS}

    def _ensemble_outputs(self) -> dict:
        members = self._member_outputs()
        gold_fine = self.splits["validation"].data.Y[:, 1:5]
        ff1 = tuple(
            ensemble.fine_weight(members[m]["validation"][0][:, 1:], gold_fine)
            for m in ENSEMBLE_MEMBERS
        )
        self.ensemble_weights = dict(zip(ENSEMBLE_MEMBERS, ff1))
        weights = ensemble.EnsembleWeights(ff1=ff1)
        result = {}
        for split in self.eval_splits:
            outputs = [
                ensemble.ModelOutputs(model_id=m, bits=members[m][split][0], strict=self.cfg.cascade)
                for m in ENSEMBLE_MEMBERS
            ]
            combined = ensemble.combine(outputs, weights, cascade=self.cfg.cascade)
            result[split] = (combined.bits, combined.scores)
        return result


def _emit_submission(ctx: _Context, name: str, out_dir: Path) -> RunArtifacts:
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = ctx.outputs(name)
    files: dict[str, str] = {}

    for split in ctx.eval_splits:
        bits, scores = outputs[split]
        path = out_dir / f"predictions_{split}.jsonl"
        write_predictions(path, ctx.splits[split].corpus.ids(), bits, scores)
        files[path.name] = str(path)

    reports = {
        split: metrics.evaluate(outputs[split][0], ctx.splits[split].data.Y)
        for split in ctx.eval_splits
    }
    report_path = out_dir / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump({s: r.to_dict() for s, r in reports.items()}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    files[report_path.name] = str(report_path)

    if name in MLP_PRESETS:
        coarse_model, fine_model, _, _ = ctx.mlp_models(name)
        tc = ctx.train_config(name)
        for label, model in (("coarse", coarse_model), ("fine", fine_model)):
            path = out_dir / f"mlp_{label}.ckpt"
            mlp.save_model(model, path, train_config=tc)
            files[path.name] = str(path)
    elif name in GBDT_SOURCE:
        coarse_booster, fine_set = ctx.gbdt_models(name)
        path = out_dir / "gbdt_coarse.json"
        gbdt.save_booster(coarse_booster, path)
        files[path.name] = str(path)
        for label, booster in zip(HOSTILE_NAMES, fine_set.boosters):
            path = out_dir / f"gbdt_{label}.json"
            gbdt.save_booster(booster, path)
            files[path.name] = str(path)
    elif name == "sub5":
        path = out_dir / "weights.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(ctx.ensemble_weights, fh, sort_keys=True, indent=2)
            fh.write("\n")
        files[path.name] = str(path)

    manifest = {
        "submission": name,
        "seed": ctx.cfg.seed,
        "config": ctx.cfg.to_dict(),
        "inputs": {
            key: {"path": getattr(ctx.cfg, key), "sha256": _sha256(getattr(ctx.cfg, key))}
            for key in ("train_corpus", "val_corpus", "test_corpus", "train_store", "val_store", "test_store")
            if getattr(ctx.cfg, key) is not None
        },
        "artifacts": {fname: _sha256(path) for fname, path in sorted(files.items())},
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    files[manifest_path.name] = str(manifest_path)

    return RunArtifacts(out_dir=str(out_dir), files=files, reports=reports, manifest=manifest)


def run_submission(cfg: ExperimentConfig) -> RunArtifacts:
    """Run one submission end to end and write its artifacts."""
    ctx = _Context(cfg)
    return _emit_submission(ctx, cfg.submission, Path(cfg.out_dir))


def reproduce_all(cfg: ExperimentConfig) -> tuple[str, dict]:
    """Run sub1..sub5, write per-submission artifacts under out_dir, and
    render our scores next to the previously reported ones."""
    ctx = _Context(cfg)
    root = Path(cfg.out_dir)
    artifacts = {}
    for name in SUBMISSIONS:
        artifacts[name] = _emit_submission(ctx, name, root / name)

    sections = []
    for split in ctx.eval_splits:
        entries = []
        for name in SUBMISSIONS:
            entries.append((name, metrics.report_row(artifacts[name].reports[split])))
            entries.append((f"{name} reported", REPORTED_SCORES[split][name]))
        sections.append(f"=== {split} ===\n{metrics.report_table(entries)}")
    table = "\n\n".join(sections) + "\n"
    (root / "comparison.txt").write_text(table, encoding="utf-8")
    return table, artifacts
