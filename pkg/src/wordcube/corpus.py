"""Plain-text ingestion: vocabulary, windowed co-occurrence counts, and
conversion to dense ratio-space matrices, plus the four-word analogy
file format.

Tokens are lowercased alphanumeric runs; newlines reset the context
window so co-occurrence never crosses line (document) boundaries.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .embed import AnalogyFamily, AnalogyQuad
from .model import CapacityError, CoocMatrix

logger = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"[a-z0-9]+")
DENSE_CAP = 12_000  # largest vocabulary we will densify / eigendecompose


class AnalogyParseError(ValueError):
    """Malformed analogy file line."""


def tokenize(line: str) -> list[str]:
    return TOKEN_RE.findall(line.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Tokens ordered by descending frequency (ties alphabetical)."""

    entries: tuple[tuple[str, int], ...]
    index: dict

    @classmethod
    def from_counts(cls, counts: Counter, m: int) -> "Vocabulary":
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:m]
        return cls(entries=tuple(ordered),
                   index={tok: i for i, (tok, _) in enumerate(ordered)})

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tok for tok, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token) -> bool:
        return token in self.index

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok, count in self.entries:
                fh.write(f"{tok}\t{count}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                tok, _, count = line.rstrip("\n").partition("\t")
                entries.append((tok, int(count)))
        return cls(entries=tuple(entries),
                   index={tok: i for i, (tok, _) in enumerate(entries)})


def build_vocab(lines, m) -> Vocabulary:
    """Top-m token frequency table over an iterable of text lines."""
    if m < 1:
        raise ValueError("vocabulary size must be >= 1")
    if m > DENSE_CAP:
        raise CapacityError(f"vocabulary size {m} exceeds the dense cap {DENSE_CAP}")
    counts = Counter()
    for line in lines:
        counts.update(tokenize(line))
    if not counts:
        raise ValueError("empty text stream")
    return Vocabulary.from_counts(counts, m)


@dataclass(frozen=True)
class CoocCounts:
    """Symmetric windowed pair counts.

    `counts` stores the upper triangle (i <= j) once; `total` is the
    symmetric mass sum_{i<=j} c_ij * (2 - [i == j]), the denominator that
    turns counts into pair probabilities.
    """

    counts: sp.csr_matrix
    total: int
    window: int
    vocab: Vocabulary

    def count(self, i, j) -> int:
        lo, hi = (i, j) if i <= j else (j, i)
        return int(self.counts[lo, hi])


def _line_ids(lines, index, window):
    ids = []
    pad = [-1] * window   # sentinel block: no pair can straddle a line break
    for line in lines:
        for tok in tokenize(line):
            ids.append(index.get(tok, -1))
        ids.extend(pad)
    return np.asarray(ids, dtype=np.int64)


def count_cooc(lines, vocab: Vocabulary, window=5) -> CoocCounts:
    """Count co-occurrences within a symmetric window, flat weighting.

    For every position t and offset r in 1..window the unordered pair
    (w_t, w_{t+r}) is counted once when both tokens are in-vocabulary.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    m = len(vocab)
    ids = _line_ids(lines, vocab.index, window)
    flat = np.zeros(m * m, dtype=np.int64)
    for r in range(1, window + 1):
        if ids.size <= r:
            break
        a, b = ids[:-r], ids[r:]
        valid = (a >= 0) & (b >= 0)
        if not valid.any():
            continue
        lo = np.minimum(a[valid], b[valid])
        hi = np.maximum(a[valid], b[valid])
        flat += np.bincount(lo * m + hi, minlength=m * m)
    nz = np.flatnonzero(flat)
    rows, cols = nz // m, nz % m
    counts = sp.csr_matrix((flat[nz], (rows, cols)), shape=(m, m))
    diag = counts.diagonal().sum()
    total = int(2 * (counts.sum() - diag) + diag)
    return CoocCounts(counts=counts, total=total, window=window, vocab=vocab)


def cooc_to_m(counts: CoocCounts) -> CoocMatrix:
    """Dense ratio matrix P(i,j) / (P(i) P(j)) from windowed counts.

    Words with zero marginal probability are dropped (with a warning);
    zero-count pairs stay exactly 0 in ratio space and need a regularizer
    before taking logs.
    """
    if counts.total <= 0:
        raise ValueError("no co-occurrence mass to normalize")
    m = len(counts.vocab)
    if m > DENSE_CAP:
        raise CapacityError(f"vocabulary of {m} words exceeds the dense cap {DENSE_CAP}")
    upper = counts.counts.toarray().astype(float)
    full = upper + upper.T - np.diag(np.diag(upper))
    pair_prob = full / counts.total
    marginal = pair_prob.sum(axis=1)
    keep = marginal > 0.0
    tokens = counts.vocab.tokens
    if not keep.all():
        dropped = [tokens[i] for i in np.flatnonzero(~keep)]
        logger.warning("dropping %d words with zero marginal: %s",
                       len(dropped), ", ".join(dropped[:10]))
        pair_prob = pair_prob[np.ix_(keep, keep)]
        marginal = marginal[keep]
        tokens = tuple(tokens[i] for i in np.flatnonzero(keep))
    values = pair_prob / np.outer(marginal, marginal)
    return CoocMatrix(values=values, space="ratio", tokens=tokens,
                      provenance="corpus")


@dataclass(frozen=True)
class AnalogyDataset:
    """Analogy families keyed by category plus out-of-vocabulary stats."""

    families: tuple[AnalogyFamily, ...]
    dropped: dict

    @property
    def n_quads(self) -> int:
        return sum(len(f) for f in self.families)


def parse_analogy_file(path, vocab) -> AnalogyDataset:
    """Read a four-word analogy benchmark file.

    Format: lines starting with ": " open a category; every other
    nonblank line holds four whitespace-separated words.  A line
    "a b c d" encodes the proportion a:b :: c:d and is evaluated as
    b - a + c ~ d, i.e. quad (A, B, C, D) = (b, a, c, d).  Quads with an
    out-of-vocabulary (or repeated) word are dropped and counted per
    category.
    """
    if isinstance(vocab, Vocabulary):
        index = vocab.index
    elif isinstance(vocab, dict):
        index = vocab
    else:
        index = {tok: i for i, tok in enumerate(vocab)}
    families = []
    dropped: dict = {}
    name = "default"
    quads: list[AnalogyQuad] = []

    def flush():
        if quads:
            families.append(AnalogyFamily(name=name, quads=tuple(quads)))

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(":"):
                flush()
                quads = []
                name = line[1:].strip() or f"category-{lineno}"
                dropped.setdefault(name, 0)
                continue
            words = line.lower().split()
            if len(words) != 4:
                raise AnalogyParseError(
                    f"line {lineno}: expected 4 words, got {len(words)}")
            if any(w not in index for w in words):
                dropped[name] = dropped.get(name, 0) + 1
                continue
            a, b, c, d = (index[w] for w in words)
            if len({a, b, c, d}) != 4:
                dropped[name] = dropped.get(name, 0) + 1
                continue
            quads.append(AnalogyQuad(b, a, c, d))
    flush()
    return AnalogyDataset(families=tuple(families), dropped=dropped)
