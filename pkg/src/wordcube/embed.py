"""Embeddings from eigensystems and top-1 analogy evaluation.

Word i is embedded as the i-th column of a K x n matrix whose row S is
sqrt(|value_S|) times eigenvector S.  An analogy quadruple (A, B, C, D)
scores when D is the nearest vocabulary vector to W_A - W_B + W_C.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .spectral import EigenSystem


@dataclass(frozen=True)
class Embedding:
    """K x n matrix of word vectors; column i is word i."""

    vectors: np.ndarray
    source: str = "M"

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_words(self) -> int:
        return self.vectors.shape[1]

    def word(self, i) -> np.ndarray:
        return self.vectors[:, i]


def embed(eigs: EigenSystem, k, source="M") -> Embedding:
    """Build the rank-k embedding from the leading eigenpairs.

    Row S of the result is sqrt(|value_S|) * vector_S; magnitudes are
    used so indefinite log-space targets embed their dominant negative
    mode too.
    """
    values, vectors = eigs.top(k)
    rows = np.sqrt(np.abs(values))[:, None] * vectors.T
    return Embedding(vectors=rows, source=source)


class AnalogyQuad(NamedTuple):
    """Word indices (a, b, c, d) encoding a - b + c ~ d."""

    a: int
    b: int
    c: int
    d: int


@dataclass(frozen=True)
class AnalogyFamily:
    """A named, nonempty set of analogy quadruples."""

    name: str
    quads: tuple[AnalogyQuad, ...]

    def __post_init__(self):
        if not self.quads:
            raise ValueError(f"analogy family {self.name!r} is empty")
        for quad in self.quads:
            if len(set(quad)) != 4:
                raise ValueError(f"quad {quad} has repeated words")
        object.__setattr__(self, "quads", tuple(AnalogyQuad(*q) for q in self.quads))

    def __len__(self) -> int:
        return len(self.quads)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.quads, dtype=np.int64)


@dataclass(frozen=True)
class EvalPolicy:
    """How the argmin over the vocabulary is resolved.

    exclusion: "include_all" ranks every word; "exclude_query_triple"
    removes A, B, C from the candidates (the Mikolov convention).
    tie_mode: "strict_fail" scores a quad only when D is the unique
    nearest word; "lowest_index" awards ties to the smallest index.
    Ties are distances within tie_tolerance * max(1, d_min) of the
    minimum.
    """

    exclusion: str = "include_all"
    tie_mode: str = "strict_fail"
    tie_tolerance: float = 1e-9

    def __post_init__(self):
        if self.exclusion not in ("include_all", "exclude_query_triple"):
            raise ValueError(f"unknown exclusion {self.exclusion!r}")
        if self.tie_mode not in ("strict_fail", "lowest_index"):
            raise ValueError(f"unknown tie_mode {self.tie_mode!r}")
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be >= 0")


DEFAULT_POLICY = EvalPolicy()


def model_analogy_tasks(d, k1, k2) -> AnalogyFamily:
    """All 2^(d-2) analogies over attribute pair (k1, k2).

    Each quad starts from a base word with both attributes at -1 and
    flips k1, nothing, k2, and both, in that order, so that
    A - B + C ~ D mirrors the attribute arithmetic.  At d = 2 this is
    the single (King, Man, Woman, Queen) quadruple.
    """
    if d < 2:
        raise ValueError("analogies need at least two attributes")
    if not (1 <= k1 <= d and 1 <= k2 <= d) or k1 == k2:
        raise ValueError(f"attribute pair ({k1}, {k2}) invalid for d={d}")
    b1 = 1 << (d - k1)
    b2 = 1 << (d - k2)
    quads = tuple(
        AnalogyQuad(base | b1, base, base | b2, base | b1 | b2)
        for base in range(1 << d)
        if not (base & b1) and not (base & b2)
    )
    return AnalogyFamily(name=f"attrs-{k1}-{k2}", quads=quads)


def all_model_families(d) -> list[AnalogyFamily]:
    """One family per unordered attribute pair."""
    return [model_analogy_tasks(d, k1, k2)
            for k1 in range(1, d + 1) for k2 in range(k1 + 1, d + 1)]


def evaluate_quads(embedding: Embedding, quads, policy: EvalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Per-quad outcome flags for a (Q, 4) index array.

    Distances are ranked with the usual quadratic expansion, then every
    candidate inside a conservative window is re-measured directly as
    ||target - W_j||; the expansion alone loses ~sqrt(eps)*scale near
    exact matches, which would turn theoretical ties into coin flips.
    """
    w = embedding.vectors
    n = embedding.n_words
    quads = np.asarray(quads, dtype=np.int64)
    if quads.ndim != 2 or quads.shape[1] != 4:
        raise ValueError("quads must be a (Q, 4) index array")
    if quads.min() < 0 or quads.max() >= n:
        raise ValueError("quad index outside the vocabulary")
    a, b, c, d = quads.T
    n_quads = quads.shape[0]
    target = w[:, a] - w[:, b] + w[:, c]                       # (K, Q)
    word_sq = np.einsum("ij,ij->j", w, w)                      # (n,)
    target_sq = np.einsum("ij,ij->j", target, target)          # (Q,)
    dist_sq = word_sq[None, :] - 2.0 * (target.T @ w) + target_sq[:, None]
    np.maximum(dist_sq, 0.0, out=dist_sq)
    if policy.exclusion == "exclude_query_triple":
        rows = np.arange(n_quads)[:, None]
        dist_sq[rows, np.stack([a, b, c], axis=1)] = np.inf

    scale = np.sqrt(max(float(word_sq.max(initial=0.0)),
                        float(target_sq.max(initial=0.0)), 1.0))
    tol = policy.tie_tolerance
    k = w.shape[0]
    # absolute error bound for the expansion, by quad
    err_sq = 64.0 * np.finfo(float).eps * (k + 4) * (
        target_sq + float(word_sq.max(initial=0.0)) + 1.0)
    d_min = np.sqrt(dist_sq.min(axis=1))
    window = (d_min + tol * np.maximum(d_min, scale) + np.sqrt(err_sq)) ** 2 \
        + err_sq
    in_window = dist_sq <= window[:, None]
    n_candidates = in_window.sum(axis=1)

    out = np.zeros(n_quads, dtype=bool)
    single = n_candidates == 1
    if single.any():
        sole = dist_sq[single].argmin(axis=1)
        out[single] = sole == d[single]
    for q in np.flatnonzero(~single):
        cand = np.flatnonzero(in_window[q])
        exact = np.linalg.norm(w[:, cand] - target[:, q:q + 1], axis=0)
        lo = exact.min()
        winners = cand[exact <= lo + tol * max(lo, scale)]
        if policy.tie_mode == "strict_fail":
            out[q] = winners.size == 1 and winners[0] == d[q]
        else:
            out[q] = winners[0] == d[q]
    return out


def top1_accuracy(embedding: Embedding, family: AnalogyFamily,
                  policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Fraction of the family's quads resolved to their fourth word."""
    return float(evaluate_quads(embedding, family.as_array(), policy).mean())


@dataclass(frozen=True)
class AccuracyCurve:
    """Accuracy as a function of embedding dimension.

    accuracies[i, j] is the accuracy of family j at k_values[i]; mean and
    std aggregate across families at each dimension.
    """

    k_values: tuple[int, ...]
    family_names: tuple[str, ...]
    accuracies: np.ndarray
    mean: np.ndarray = field(init=False)
    std: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", self.accuracies.mean(axis=1))
        object.__setattr__(self, "std", self.accuracies.std(axis=1))


def accuracy_vs_k(eigs: EigenSystem, families, k_values,
                  policy: EvalPolicy = DEFAULT_POLICY, source="M") -> AccuracyCurve:
    """Evaluate every family at every embedding dimension in k_values."""
    k_values = tuple(int(k) for k in k_values)
    if not k_values:
        raise ValueError("k_values must be nonempty")
    if min(k_values) < 1 or max(k_values) > eigs.n:
        raise ValueError(f"k_values must lie in 1..{eigs.n}")
    families = list(families)
    if not families:
        raise ValueError("no analogy families to evaluate")
    full = embed(eigs, max(k_values), source=source)
    quad_arrays = [fam.as_array() for fam in families]
    acc = np.empty((len(k_values), len(families)))
    for i, k in enumerate(k_values):
        view = Embedding(vectors=full.vectors[:k], source=source)
        for j, quads in enumerate(quad_arrays):
            acc[i, j] = evaluate_quads(view, quads, policy).mean()
    return AccuracyCurve(
        k_values=k_values,
        family_names=tuple(f.name for f in families),
        accuracies=acc,
    )
