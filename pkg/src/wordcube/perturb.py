"""Perturbations of co-occurrence matrices and their diagnostics.

Four regimes: entrywise noise (multiplicative in ratio space or additive
in log space), random vocabulary subsampling, removal of all word pairs
that differ in a single attribute, and removal of listed corpus pairs.
All transforms are pure functions of (input, spec) including the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CoocMatrix

NOISE_KINDS = ("multiplicative_ratio", "additive_log")


class SubsampleError(RuntimeError):
    """Retention draw kept fewer than two words; reseed and retry."""


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class SubsampleSpec:
    """Per-word Bernoulli retention with probability f.

    `size` switches to a fixed retained-count draw, for plots that need a
    reproducible vocabulary size.
    """

    f: float
    seed: int = 0
    size: int | None = None

    def __post_init__(self):
        if not 0.0 < self.f <= 1.0:
            raise ValueError("retention probability must lie in (0, 1]")


@dataclass(frozen=True)
class PruneSpec:
    """Either a synthetic attribute index or an explicit corpus pair list."""

    attribute: int | None = None
    pairs: tuple | None = None

    def __post_init__(self):
        if (self.attribute is None) == (self.pairs is None):
            raise ValueError("give exactly one of attribute or pairs")


def _symmetric_noise(n, sigma, seed):
    # drawn on the upper triangle (incl. diagonal) and mirrored, so the
    # output is exactly symmetric
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n)) * sigma
    return np.triu(x) + np.triu(x, 1).T


def apply_noise(m: CoocMatrix, spec: NoiseSpec) -> CoocMatrix:
    """Entrywise noise: M * exp(xi) in ratio space, M + xi in log space."""
    if spec.kind == "multiplicative_ratio":
        m.require_space("ratio")
    else:
        m.require_space("log")
    noise = _symmetric_noise(m.n, spec.sigma, spec.seed)
    if spec.kind == "multiplicative_ratio":
        values = m.values * np.exp(noise)
    else:
        values = m.values + noise
    return CoocMatrix(values=values, space=m.space, vocab=m.vocab,
                      tokens=m.tokens, provenance=f"perturbed:{spec.kind}")


def subsample_vocab(m: CoocMatrix, spec: SubsampleSpec):
    """Restrict the matrix to a random retained vocabulary.

    Returns (submatrix, retained_indices).  Raises SubsampleError when
    fewer than two words survive.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.size is not None:
        if not 2 <= spec.size <= m.n:
            raise ValueError(f"fixed size must lie in 2..{m.n}")
        retained = np.sort(rng.choice(m.n, size=spec.size, replace=False))
    else:
        retained = np.flatnonzero(rng.random(m.n) < spec.f)
        if retained.size < 2:
            raise SubsampleError(
                f"retention f={spec.f} kept {retained.size} < 2 words")
    values = m.values[np.ix_(retained, retained)].copy()
    vocab = None if m.vocab is None else m.vocab[retained]
    tokens = None if m.tokens is None else tuple(m.tokens[i] for i in retained)
    sub = CoocMatrix(values=values, space=m.space, vocab=vocab, tokens=tokens,
                     provenance="perturbed:subsample")
    return sub, retained


def gram_spectrum(retained_vectors, couplings) -> np.ndarray:
    """Eigenvalues (descending) of the d x d retained-attribute Gram matrix.

    G = D^(1/2) S^T S D^(1/2) with S the (m, d) retained sign rows and D
    the diagonal of log-kernel couplings.  With the full hypercube the
    columns are orthogonal and the spectrum is exactly 2^d * couplings;
    for random retention it concentrates around m * couplings as m/d
    grows.
    """
    s = np.asarray(retained_vectors, dtype=float)
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("retained vectors must form a nonempty (m, d) array")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("gram_spectrum expects binary sign rows")
    g = np.asarray(couplings, dtype=float)
    if g.shape != (s.shape[1],):
        raise ValueError("couplings must have one entry per attribute")
    if np.any(g < 0):
        raise ValueError("couplings must be nonnegative")
    b = s * np.sqrt(g)
    return np.sort(np.linalg.eigvalsh(b.T @ b))[::-1]


def prune_attribute_pairs(pmi: CoocMatrix, k) -> CoocMatrix:
    """Zero the log entries of every word pair differing only in attribute k.

    Touches the 2^(d-1) unordered pairs (i, i xor bit_k), both orders:
    2^d entries in total.
    """
    pmi.require_space("log")
    d = pmi.n_attrs
    if d is None or pmi.n != (1 << d):
        raise ValueError("attribute pruning needs a full synthetic vocabulary")
    if not 1 <= k <= d:
        raise ValueError(f"attribute {k} out of range 1..{d}")
    bit = 1 << (d - k)
    idx = np.arange(pmi.n)
    values = pmi.values.copy()
    values[idx, idx ^ bit] = 0.0
    return CoocMatrix(values=values, space="log", vocab=pmi.vocab,
                      tokens=pmi.tokens, provenance=f"perturbed:prune-attr-{k}")


def _resolve_pairs(pairs, tokens, n):
    resolved = []
    index = None
    for pair in pairs:
        if len(pair) != 2:
            raise ValueError(f"pair {pair!r} must have two entries")
        out = []
        for w in pair:
            if isinstance(w, str):
                if index is None:
                    if tokens is None:
                        raise ValueError("token pairs need a token vocabulary")
                    index = {t: i for i, t in enumerate(tokens)}
                if w not in index:
                    raise ValueError(f"unknown word {w!r} in pair list")
                out.append(index[w])
            else:
                i = int(w)
                if not 0 <= i < n:
                    raise ValueError(f"word index {i} outside the vocabulary")
                out.append(i)
        resolved.append(tuple(out))
    return resolved


def prune_corpus_pairs(obj, pairs, epsilon=1e-2):
    """Remove listed symmetric co-occurrences.

    On count objects (anything exposing `.counts`/`.total`, see
    corpus.CoocCounts) the counts are zeroed before normalization, which
    is the closest analogue of deleting the pairs from the corpus.  On a
    ratio-space matrix the entries become 0; on a log-space matrix they
    become log(epsilon), the value a zero count acquires under the
    regularizer.
    """
    if isinstance(obj, CoocMatrix):
        resolved = _resolve_pairs(pairs, obj.tokens, obj.n)
        values = obj.values.copy()
        fill = 0.0 if obj.space == "ratio" else math.log(epsilon)
        for i, j in resolved:
            values[i, j] = fill
            values[j, i] = fill
        return CoocMatrix(values=values, space=obj.space, vocab=obj.vocab,
                          tokens=obj.tokens, provenance="perturbed:prune-pairs")
    # count-space object
    from .corpus import CoocCounts
    if not isinstance(obj, CoocCounts):
        raise TypeError("expected a CoocMatrix or CoocCounts")
    resolved = _resolve_pairs(pairs, obj.vocab.tokens, len(obj.vocab))
    counts = obj.counts.tolil(copy=True)
    for i, j in resolved:
        lo, hi = min(i, j), max(i, j)
        counts[lo, hi] = 0
    counts = counts.tocsr()
    counts.eliminate_zeros()
    off_diag = counts.sum() - counts.diagonal().sum()
    total = int(2 * off_diag + counts.diagonal().sum())
    return CoocCounts(counts=counts, total=total, window=obj.window,
                      vocab=obj.vocab)


def breakdown_k(d, sigma) -> int:
    """Embedding dimension where additive log-space noise is predicted to
    overwhelm the attribute modes: round(2^(d/2) / sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return int(round(2.0 ** (d / 2.0) / sigma))
