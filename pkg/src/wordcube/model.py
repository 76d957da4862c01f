"""Binary-attribute generative model of word co-occurrence.

Words are the vertices of the attribute hypercube {-1,+1}^d.  Each
attribute contributes an independent 2x2 interaction kernel, so once the
vocabulary is ordered by its binary word index the rescaled co-occurrence
matrix M(i,j) = P(i,j) / (P(i) P(j)) is the Kronecker product of the d
kernels.  A three-value variant (with a neutral attribute setting) is
provided alongside the binary model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

D_MAX_BINARY = 13    # dense 2^d x 2^d storage cap (8192^2 doubles ~ 0.5 GB)
D_MAX_TERTIARY = 8   # dense 3^d x 3^d storage cap


class CapacityError(ValueError):
    """Attribute count would exceed the dense-storage cap."""


def _check_open_unit(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d sequence")
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError(f"every {name} entry must lie strictly inside (0, 1)")
    return tuple(float(x) for x in arr)


def _check_odds(values, name="odds"):
    arr = np.asarray(values, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise ValueError(f"every {name} entry must lie in (0, 1]")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class ModelConfig:
    """Full parameterization of the generative model.

    strengths -- per-attribute signal strength, each strictly in (0, 1).
    odds      -- per-attribute odds that the attribute takes its positive
                 value (odds = p/(1-p), in (0, 1]); all-ones is the
                 symmetric case p = 1/2.
    seed      -- RNG seed the strengths were drawn with (provenance).
    """

    strengths: tuple[float, ...]
    odds: tuple[float, ...]
    seed: int = 0
    strength_mode: str = "explicit"
    strength_mu: float | None = None
    strength_sigma: float | None = None

    def __post_init__(self):
        d = len(self.strengths)
        if d < 1:
            raise ValueError("need at least one attribute")
        if d > D_MAX_BINARY:
            raise CapacityError(
                f"d={d} exceeds the dense-storage cap d_max={D_MAX_BINARY}")
        object.__setattr__(self, "strengths",
                           _check_open_unit(self.strengths, "strength"))
        if len(self.odds) != d:
            raise ValueError("strengths and odds must have equal length")
        object.__setattr__(self, "odds", _check_odds(self.odds))

    @property
    def n_attrs(self) -> int:
        return len(self.strengths)

    @property
    def n_words(self) -> int:
        return 1 << self.n_attrs

    @property
    def positive_probs(self) -> np.ndarray:
        """Probability of the +1 setting per attribute, p = odds/(1+odds)."""
        q = np.asarray(self.odds)
        return q / (1.0 + q)

    def save(self, path):
        """Write the flat key-value text form (keys: d, seed, s_mode,
        s_mu, s_sigma, q_mode, s_values, q_values)."""
        lines = [
            f"d = {self.n_attrs}",
            f"seed = {self.seed}",
            f"s_mode = {self.strength_mode}",
        ]
        if self.strength_mu is not None:
            lines.append(f"s_mu = {self.strength_mu!r}")
        if self.strength_sigma is not None:
            lines.append(f"s_sigma = {self.strength_sigma!r}")
        q_mode = "ones" if all(q == 1.0 for q in self.odds) else "explicit"
        lines.append(f"q_mode = {q_mode}")
        lines.append("s_values = " + ",".join(repr(s) for s in self.strengths))
        lines.append("q_values = " + ",".join(repr(q) for q in self.odds))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "ModelConfig":
        kv = {}
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                kv[key.strip()] = value.strip()
        strengths = tuple(float(x) for x in kv["s_values"].split(","))
        odds = tuple(float(x) for x in kv["q_values"].split(","))
        if int(kv["d"]) != len(strengths):
            raise ValueError("declared d disagrees with s_values length")
        return cls(
            strengths=strengths,
            odds=odds,
            seed=int(kv.get("seed", "0")),
            strength_mode=kv.get("s_mode", "explicit"),
            strength_mu=float(kv["s_mu"]) if "s_mu" in kv else None,
            strength_sigma=float(kv["s_sigma"]) if "s_sigma" in kv else None,
        )


def sample_config(d, s_distribution="uniform", q_mode="ones", seed=0, *,
                  mu=0.5, sigma=1e-3, strengths=None, odds=None) -> ModelConfig:
    """Draw a model configuration.

    s_distribution is one of "normal" (mean mu, std sigma, redrawn until
    inside (0,1)), "uniform" (on (0,1)), or "explicit" (use `strengths`
    as given).  q_mode is "ones" or "explicit" (use `odds`).  The result
    is a pure function of all inputs.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > D_MAX_BINARY:
        raise CapacityError(f"d={d} exceeds d_max={D_MAX_BINARY}")
    rng = np.random.default_rng(seed)
    if s_distribution == "normal":
        s = rng.normal(mu, sigma, size=d)
        bad = (s <= 0.0) | (s >= 1.0)
        while bad.any():  # rejection, not clamping: no atoms at 0/1
            s[bad] = rng.normal(mu, sigma, size=int(bad.sum()))
            bad = (s <= 0.0) | (s >= 1.0)
        mode_mu, mode_sigma = float(mu), float(sigma)
    elif s_distribution == "uniform":
        s = rng.random(d)
        bad = s <= 0.0
        while bad.any():
            s[bad] = rng.random(int(bad.sum()))
            bad = s <= 0.0
        mode_mu = mode_sigma = None
    elif s_distribution == "explicit":
        if strengths is None:
            raise ValueError("explicit mode requires strengths")
        s = np.asarray(strengths, dtype=float)
        if s.size != d:
            raise ValueError("explicit strengths must have length d")
        mode_mu = mode_sigma = None
    else:
        raise ValueError(f"unknown s_distribution {s_distribution!r}")

    if q_mode == "ones":
        q = np.ones(d)
    elif q_mode == "explicit":
        if odds is None:
            raise ValueError("explicit q_mode requires odds")
        q = np.asarray(odds, dtype=float)
        if q.size != d:
            raise ValueError("explicit odds must have length d")
    else:
        raise ValueError(f"unknown q_mode {q_mode!r}")

    return ModelConfig(
        strengths=tuple(float(x) for x in s),
        odds=tuple(float(x) for x in q),
        seed=int(seed),
        strength_mode=s_distribution,
        strength_mu=mode_mu,
        strength_sigma=mode_sigma,
    )


# ---------------------------------------------------------------------------
# Word indexing
# ---------------------------------------------------------------------------

def word_index(alpha, d=None) -> int:
    """Binary index of an attribute vector.

    Attribute 1 is the most significant bit and +1 maps to bit 1, so the
    all-minus word is index 0 and the all-plus word is 2^d - 1.
    """
    bits = np.asarray(alpha)
    if d is None:
        d = bits.size
    if bits.size != d:
        raise ValueError("attribute vector length disagrees with d")
    if not np.all(np.abs(bits) == 1):
        raise ValueError("word_index is defined for the binary alphabet only")
    n = 0
    for v in bits:
        n = (n << 1) | (1 if v > 0 else 0)
    return n


def word_attributes(index, d) -> np.ndarray:
    """Inverse of word_index: attribute vector of word `index`."""
    if not 0 <= index < (1 << d):
        raise ValueError(f"index {index} out of range for d={d}")
    bits = (index >> np.arange(d - 1, -1, -1)) & 1
    return (2 * bits - 1).astype(np.int8)


def all_attribute_vectors(d) -> np.ndarray:
    """(2^d, d) array whose row i is the attribute vector of word i."""
    idx = np.arange(1 << d, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(d - 1, -1, -1)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def all_tertiary_vectors(d) -> np.ndarray:
    """(3^d, d) array of three-value attribute rows in base-3 index order.

    Digit order is -1 -> 0, +1 -> 1, 0 (neutral) -> 2, with attribute 1
    as the most significant digit.
    """
    idx = np.arange(3 ** d, dtype=np.int64)[:, None]
    digits = (idx // (3 ** np.arange(d - 1, -1, -1, dtype=np.int64))[None, :]) % 3
    lut = np.array([-1, 1, 0], dtype=np.int8)
    return lut[digits]


# ---------------------------------------------------------------------------
# Unigram statistics
# ---------------------------------------------------------------------------

def unigram_prob(alpha, config: ModelConfig) -> float:
    """Occurrence probability of the word with attribute vector `alpha`."""
    bits = np.asarray(alpha)
    if bits.size != config.n_attrs:
        raise ValueError("attribute vector length disagrees with config")
    p = config.positive_probs
    return float(np.prod(np.where(bits > 0, p, 1.0 - p)))


def all_unigram_probs(config: ModelConfig) -> np.ndarray:
    """Unigram probabilities for the whole vocabulary in index order."""
    out = np.ones(1)
    for p in config.positive_probs:
        out = np.kron(out, np.array([1.0 - p, p]))
    return out


# ---------------------------------------------------------------------------
# Interaction kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairKernel:
    """Per-attribute co-occurrence kernel.

    Binary kernels hold their entries in the conventional printed
    orientation with rows/columns ordered (+1, -1); `indexed_entries`
    reorders to the storage order used by the matrix builders, where the
    -1 setting comes first.  Three-value kernels are ordered (-1, +1, 0),
    which already matches storage order.
    """

    entries: np.ndarray
    strength: float
    odds: float | None = None
    neutral_freq: float | None = None

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=float)
        if ent.shape not in ((2, 2), (3, 3)):
            raise ValueError("kernel must be 2x2 or 3x3")
        if not np.array_equal(ent, ent.T):
            raise ValueError("kernel must be symmetric")
        object.__setattr__(self, "entries", ent)

    @property
    def is_binary(self) -> bool:
        return self.entries.shape == (2, 2)

    @property
    def indexed_entries(self) -> np.ndarray:
        if self.is_binary:
            return self.entries[::-1, ::-1]
        return self.entries


def pair_kernel(s, q=1.0) -> PairKernel:
    """Binary kernel [[1+s, 1-qs], [1-qs, 1+q^2 s]].

    The single strength s fixes the whole kernel because the row sums
    weighted by the attribute marginals must equal one.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"strength must lie in (0, 1), got {s}")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"odds must lie in (0, 1], got {q}")
    entries = np.array([[1.0 + s, 1.0 - q * s],
                        [1.0 - q * s, 1.0 + q * q * s]])
    return PairKernel(entries=entries, strength=float(s), odds=float(q))


def tertiary_kernel(s, f) -> PairKernel:
    """Three-value kernel with a neutral setting, rows/cols (-1, +1, 0).

    s weighs matching against opposite polarities; f is the (small)
    weight of the non-neutral settings.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"strength must lie in [0, 1], got {s}")
    if not 0.0 <= f < 1.0:
        raise ValueError(f"neutral weight must lie in [0, 1), got {f}")
    half = 0.5 * f
    entries = np.array([
        [1.0 + s + half, 1.0 - s + half, 1.0 - f],
        [1.0 - s + half, 1.0 + s + half, 1.0 - f],
        [1.0 - f, 1.0 - f, 1.0 + 2.0 * f],
    ])
    return PairKernel(entries=entries, strength=float(s), neutral_freq=float(f))


# ---------------------------------------------------------------------------
# Co-occurrence matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoocMatrix:
    """Dense symmetric co-occurrence matrix over a vocabulary.

    space is "ratio" (entries P(i,j)/(P(i)P(j))) or "log" (entrywise
    logarithm, possibly regularized).  For synthetic vocabularies `vocab`
    holds the (n, d) attribute rows in index order; corpus vocabularies
    carry `tokens` instead.
    """

    values: np.ndarray
    space: str
    vocab: np.ndarray | None = None
    tokens: tuple[str, ...] | None = None
    provenance: str = "synthetic"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError("co-occurrence matrix must be square")
        if self.space not in ("ratio", "log"):
            raise ValueError(f"unknown space tag {self.space!r}")
        object.__setattr__(self, "values", vals)
        if self.tokens is not None:
            object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_attrs(self) -> int | None:
        return None if self.vocab is None else self.vocab.shape[1]

    def require_space(self, space):
        if self.space != space:
            raise ValueError(f"expected a {space}-space matrix, got {self.space}")


def build_m(config: ModelConfig) -> CoocMatrix:
    """Rescaled co-occurrence matrix of the binary model.

    Equal to the Kronecker product of the per-attribute kernels under the
    word_index ordering; entry (i, j) is the product over attributes of
    the kernel value at (alpha_i^k, alpha_j^k).
    """
    values = np.ones((1, 1))
    for s, q in zip(config.strengths, config.odds):
        values = np.kron(values, pair_kernel(s, q).indexed_entries)
    return CoocMatrix(values=values, space="ratio",
                      vocab=all_attribute_vectors(config.n_attrs))


def build_pmi(m: CoocMatrix, epsilon=0.0) -> CoocMatrix:
    """Entrywise log(M + epsilon) of a ratio-space matrix.

    epsilon = 0 keeps the noiseless synthetic theory exact; corpus
    matrices with zero entries need epsilon > 0.
    """
    m.require_space("ratio")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    shifted = m.values + epsilon
    if np.any(shifted <= 0.0):
        raise ValueError(
            "matrix has entries with M + epsilon <= 0; corpus zeros need a "
            "positive regularizer")
    return CoocMatrix(values=np.log(shifted), space="log", vocab=m.vocab,
                      tokens=m.tokens, provenance=m.provenance)


def build_tertiary_m(d, strengths, neutral_freqs) -> CoocMatrix:
    """Kronecker product of three-value kernels over base-3 word indices."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > D_MAX_TERTIARY:
        raise CapacityError(
            f"tertiary d={d} exceeds d_max={D_MAX_TERTIARY} (3^d storage)")
    s = np.asarray(strengths, dtype=float)
    f = np.asarray(neutral_freqs, dtype=float)
    if s.size != d or f.size != d:
        raise ValueError("strengths and neutral_freqs must have length d")
    values = np.ones((1, 1))
    for sk, fk in zip(s, f):
        values = np.kron(values, tertiary_kernel(sk, fk).entries)
    return CoocMatrix(values=values, space="ratio",
                      vocab=all_tertiary_vectors(d))
