"""Dataset parsing, text preprocessing, and label encoding.

A corpus file is UTF-8, tab-separated, one post per line, with a header
line and three columns: id, text, comma-separated label names. Label
vocabulary (fixed order): non-hostile, fake, hate, offensive, defamation.
A post is either non-hostile or carries one or more hostile labels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputError, IntegrityError

LABEL_NAMES = ("non-hostile", "fake", "hate", "offensive", "defamation")
HOSTILE_NAMES = LABEL_NAMES[1:]
SPLITS = ("train", "validation", "test")

_LABEL_INDEX = {name: i for i, name in enumerate(LABEL_NAMES)}

# A URL token is an http(s) scheme or a www. prefix followed by anything
# up to the next whitespace.
_URL_RE = re.compile(r"(?:https?://|www\.)\S*")
_WS_RE = re.compile(r"\s+")


class ParseError(InputError):
    """Malformed corpus row; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class VocabularyError(InputError):
    """Label name outside the five-name vocabulary, or empty/duplicated."""


class LabelConsistencyError(InputError):
    """Label combination violating the non-hostile XOR hostile rule."""


@dataclass(frozen=True)
class LabelVector:
    """Multi-hot label bits in the fixed vocabulary order.

    Exactly one of the following holds: the non-hostile bit is set and all
    hostile bits are clear, or the non-hostile bit is clear and at least
    one hostile bit is set.
    """

    bits: tuple[int, int, int, int, int]

    def __post_init__(self):
        if len(self.bits) != 5 or any(b not in (0, 1) for b in self.bits):
            raise LabelConsistencyError(f"bits must be five 0/1 flags, got {self.bits!r}")
        hostile = sum(self.bits[1:])
        if self.bits[0] == 1 and hostile > 0:
            raise LabelConsistencyError("non-hostile cannot be combined with hostile labels")
        if self.bits[0] == 0 and hostile == 0:
            raise LabelConsistencyError("a post must be non-hostile or carry a hostile label")

    @property
    def is_hostile(self) -> bool:
        return self.bits[0] == 0

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, b in zip(LABEL_NAMES, self.bits) if b)


@dataclass(frozen=True)
class LabeledPost:
    id: str
    raw_text: str
    clean_text: str
    labels: LabelVector


@dataclass(frozen=True)
class Corpus:
    """Posts of one split, in file order."""

    split: str
    posts: tuple[LabeledPost, ...]

    def __len__(self) -> int:
        return len(self.posts)

    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.posts)

    def label_rows(self) -> list[tuple[int, ...]]:
        return [p.labels.bits for p in self.posts]


@dataclass(frozen=True)
class SplitStats:
    fake: int
    hate: int
    offense: int
    defame: int
    hostile: int
    non_hostile: int

    def to_dict(self) -> dict[str, int]:
        return {
            "fake": self.fake,
            "hate": self.hate,
            "offense": self.offense,
            "defame": self.defame,
            "hostile": self.hostile,
            "non_hostile": self.non_hostile,
        }


def preprocess_post(raw_text: str) -> str:
    """Drop URL tokens, collapse whitespace runs, trim. Idempotent.

    Emojis and hashtags pass through untouched.
    """
    text = _URL_RE.sub("", raw_text)
    return _WS_RE.sub(" ", text).strip()


def encode_labels(names: list[str]) -> LabelVector:
    """Encode label names (case-insensitive, whitespace-stripped) as a multi-hot vector."""
    if not names:
        raise VocabularyError("label list is empty")
    bits = [0, 0, 0, 0, 0]
    for name in names:
        key = name.strip().lower()
        if key not in _LABEL_INDEX:
            raise VocabularyError(f"unknown label name {name!r}")
        idx = _LABEL_INDEX[key]
        if bits[idx]:
            raise VocabularyError(f"duplicate label name {name!r}")
        bits[idx] = 1
    return LabelVector(tuple(bits))


def parse_corpus(path, split: str) -> Corpus:
    """Parse a corpus TSV file, preserving row order.

    Raises ParseError for rows without exactly three fields, VocabularyError
    / LabelConsistencyError for bad labels, IntegrityError for repeated ids.
    """
    if split not in SPLITS:
        raise InputError(f"unknown split {split!r}; expected one of {SPLITS}")
    posts: list[LabeledPost] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no == 1:
                continue  # header
            row = line.rstrip("\r\n")
            fields = row.split("\t")
            if len(fields) != 3:
                raise ParseError(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
            post_id, text, label_field = fields
            if not post_id:
                raise ParseError(line_no, "empty id")
            if post_id in seen:
                raise IntegrityError(f"line {line_no}: duplicate id {post_id!r}")
            seen.add(post_id)
            try:
                labels = encode_labels(label_field.split(","))
            except InputError as exc:
                raise type(exc)(f"line {line_no}: {exc}") from None
            posts.append(
                LabeledPost(id=post_id, raw_text=text, clean_text=preprocess_post(text), labels=labels)
            )
    return Corpus(split=split, posts=tuple(posts))


def write_corpus(corpus: Corpus, path) -> None:
    """Serialize a corpus back to the TSV input format (header + rows)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\ttext\tlabels\n")
        for post in corpus.posts:
            if "\t" in post.raw_text or "\n" in post.raw_text or "\r" in post.raw_text:
                raise InputError(f"post {post.id!r}: text contains tab or newline")
            fh.write(f"{post.id}\t{post.raw_text}\t{','.join(post.labels.names())}\n")


def split_stats(corpus: Corpus) -> SplitStats:
    """Per-class counts plus hostile / non-hostile totals."""
    if not corpus.posts:
        raise InputError("corpus is empty")
    counts = [0, 0, 0, 0]
    hostile = 0
    for post in corpus.posts:
        bits = post.labels.bits
        if bits[0] == 0:
            hostile += 1
        for i in range(4):
            counts[i] += bits[i + 1]
    return SplitStats(
        fake=counts[0],
        hate=counts[1],
        offense=counts[2],
        defame=counts[3],
        hostile=hostile,
        non_hostile=len(corpus.posts) - hostile,
    )
