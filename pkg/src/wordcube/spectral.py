"""Eigensystems of co-occurrence matrices, three ways.

Closed forms for the 2x2 kernels, the exact Kronecker-product
eigendecomposition of synthetic matrices, and a dense numeric solver for
anything symmetric.  Also the bilinear decomposition of the log matrix,
whose coefficients bound its rank by d + 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import (CoocMatrix, ModelConfig, PairKernel, all_attribute_vectors,
                    pair_kernel)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs sorted by descending absolute eigenvalue.

    Column j of `vectors` pairs with values[j].  Analytic systems carry a
    per-pair label: one '+'/'-' character per attribute giving the kernel
    branch the pair was assembled from.
    """

    values: np.ndarray
    vectors: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.values.size

    def top(self, k):
        """Leading k eigenvalues and eigenvectors."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} out of range 1..{self.n}")
        return self.values[:k], self.vectors[:, :k]


def kernel_eigs(kernel: PairKernel):
    """Closed-form eigenpairs of a binary kernel.

    Returns (values, vectors) with values[0] >= values[1]; vector columns
    are unit length, components ordered like the stored matrix rows
    (the -1 setting first), sign fixed so the -1 component is positive.
    For q = 1 the pairs reduce to 2, 2s with vectors (1, 1)/sqrt(2) and
    (1, -1)/sqrt(2).
    """
    if not kernel.is_binary:
        raise ValueError("closed forms cover binary kernels only")
    s, q = kernel.strength, kernel.odds
    root = math.sqrt(s * s * (1 + q * q) ** 2 - 8 * q * s + 4)
    mid = 1.0 + 0.5 * s * (1 + q * q)
    values = np.array([mid + 0.5 * root, mid - 0.5 * root])
    denom = 2.0 * (1.0 - q * s)
    x_hi = ((1 - q * q) * s + root) / denom
    x_lo = ((1 - q * q) * s - root) / denom
    vectors = np.array([[1.0, 1.0], [x_hi, x_lo]])
    vectors /= np.linalg.norm(vectors, axis=0)  # first component stays > 0
    return values, vectors


def first_order_eigs(s, q):
    """Small-signal expansion of the binary kernel eigenpairs.

    values ~ (2 + s(1-q)^2/2, s(1+q)^2/2); vectors carry the O(s)
    correction mixing (1,1) and (1,-1).  Exact at q = 1 (vectors) and at
    s = 0 (everything).
    """
    values = np.array([2.0 + 0.5 * s * (1 - q) ** 2, 0.5 * s * (1 + q) ** 2])
    a = s * (q * q - 1) / 4.0
    v_hi = np.array([1.0 + a, 1.0 - a])
    v_lo = np.array([1.0 - a, -1.0 - a])  # sign chosen so component 0 is > 0
    vectors = np.column_stack([v_hi / np.linalg.norm(v_hi),
                               v_lo / np.linalg.norm(v_lo)])
    return values, vectors


def analytic_eigensystem(config: ModelConfig) -> EigenSystem:
    """All 2^d eigenpairs of build_m(config), assembled without touching M.

    Eigenvalues are products of per-kernel eigenvalues and eigenvectors
    are Kronecker products of per-kernel eigenvectors, one branch choice
    ('+' or '-') per attribute.  Ties in |value| are ordered by ascending
    label.
    """
    values = np.ones(1)
    vectors = np.ones((1, 1))
    for s, q in zip(config.strengths, config.odds):
        lam, vec = kernel_eigs(pair_kernel(s, q))
        values = np.kron(values, lam)
        vectors = np.kron(vectors, vec)
    d = config.n_attrs
    labels = []
    for c in range(1 << d):
        bits = (c >> np.arange(d - 1, -1, -1)) & 1
        labels.append("".join("-" if b else "+" for b in bits))
    order = sorted(range(1 << d), key=lambda j: (-abs(values[j]), labels[j]))
    return EigenSystem(values=values[order], vectors=vectors[:, order],
                       labels=tuple(labels[j] for j in order))


def numeric_eigensystem(m, asym_tol=1e-9) -> EigenSystem:
    """Dense eigendecomposition of a symmetric matrix.

    Accepts a CoocMatrix or a plain array.  Ties in |value| are broken by
    the ascending index of each eigenvector's first max-magnitude
    component; signs are fixed the same way, so the output is a pure
    function of the input.
    """
    a = m.values if isinstance(m, CoocMatrix) else np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > asym_tol:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    values, vectors = np.linalg.eigh(a)
    lead = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[lead, np.arange(values.size)] < 0
    vectors[:, flip] *= -1.0
    order = np.lexsort((lead, -np.abs(values)))
    return EigenSystem(values=values[order], vectors=vectors[:, order])


# ---------------------------------------------------------------------------
# Bilinear structure of the log matrix
# ---------------------------------------------------------------------------

class LogKernelCoeffs(NamedTuple):
    """Coefficients of log K(a, b) = offset + linear*(a+b) + coupling*ab."""

    offset: float
    linear: float
    coupling: float


def pmi_coefficients(s, q=1.0) -> LogKernelCoeffs:
    """Bilinear expansion coefficients of a binary kernel's log entries.

    At q = 1: offset = log(1-s^2)/2, linear = 0,
    coupling = log((1+s)/(1-s))/2.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"strength must lie in (0, 1), got {s}")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"odds must lie in (0, 1], got {q}")
    lp = math.log1p(s)
    lq = math.log1p(q * q * s)
    lx = math.log1p(-q * s)
    return LogKernelCoeffs(
        offset=0.25 * (lp + lq + 2.0 * lx),
        linear=0.25 * (lp - lq),
        coupling=0.25 * (lp + lq - 2.0 * lx),
    )


@dataclass(frozen=True)
class PmiStructure:
    """Low-rank decomposition of the noiseless log matrix.

    log M = offset * 11^T + S diag(coupling) S^T + (S linear) 1^T
            + 1 (S linear)^T
    where S is the (2^d, d) matrix of attribute signs.  The row space is
    spanned by the constant vector and the d attribute columns, so the
    rank is at most d + 1.
    """

    offset: float
    linear: np.ndarray
    coupling: np.ndarray
    signs: np.ndarray

    @property
    def n_attrs(self) -> int:
        return self.linear.size

    @property
    def rank_bound(self) -> int:
        return self.n_attrs + 1

    def reconstruct(self) -> np.ndarray:
        a = self.signs.astype(float)
        h = a @ self.linear
        return (self.offset
                + np.add.outer(h, h)
                + (a * self.coupling) @ a.T)


def pmi_structure(config: ModelConfig) -> PmiStructure:
    """Assemble the bilinear decomposition for a binary configuration."""
    coeffs = [pmi_coefficients(s, q)
              for s, q in zip(config.strengths, config.odds)]
    return PmiStructure(
        offset=float(sum(c.offset for c in coeffs)),
        linear=np.array([c.linear for c in coeffs]),
        coupling=np.array([c.coupling for c in coeffs]),
        signs=all_attribute_vectors(config.n_attrs),
    )


def tertiary_perturbation_eigs(s, f):
    """First-order eigenvalues of the three-value kernel.

    The constant mode stays at 3 and the polarity-contrast mode at 2s;
    the neutral-contrast mode grows linearly with the neutral weight.
    For the kernel as constructed the linear order is exact: the base
    and bump parts commute, so the spectrum is exactly (3, 2s, 3f).
    """
    return 3.0, 2.0 * float(s), 3.0 * float(f)


# ---------------------------------------------------------------------------
# Eigenspace matching
# ---------------------------------------------------------------------------

def value_clusters(values, rel_tol=1e-6):
    """Group consecutive indices whose |values| agree within rel_tol.

    Input must already be sorted by descending magnitude (EigenSystem
    order).  Individual eigenvectors are not unique inside a cluster, so
    comparisons should happen cluster by cluster via subspace_angle.
    """
    mags = np.abs(np.asarray(values, dtype=float))
    clusters = [[0]]
    for j in range(1, mags.size):
        scale = max(mags[j - 1], mags[j], 1e-300)
        if (mags[j - 1] - mags[j]) <= rel_tol * scale:
            clusters[-1].append(j)
        else:
            clusters.append([j])
    return clusters


def subspace_angle(a, b) -> float:
    """Largest principal angle (radians) between two column spans."""
    qa, _ = np.linalg.qr(np.atleast_2d(np.asarray(a, dtype=float)))
    qb, _ = np.linalg.qr(np.atleast_2d(np.asarray(b, dtype=float)))
    if qa.shape[1] != qb.shape[1]:
        raise ValueError("subspaces must have equal dimension")
    sv = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))


# ---------------------------------------------------------------------------
# Spectrum summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumDensity:
    """Log-spaced histogram of positive eigenvalues plus a moment fit."""

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    log_mean: float
    log_std: float
    excluded_fraction: float
    n_values: int


def spectrum_density(values, bins=50) -> SpectrumDensity:
    """Histogram eigenvalues on log-spaced bins and moment-fit log-values.

    Only positive values enter the histogram and the (log_mean, log_std)
    fit; the fraction excluded is reported.  Raises if nothing is
    positive.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        raise ValueError("empty value list")
    pos = vals[vals > 0.0]
    if pos.size == 0:
        raise ValueError("no positive values: log-space fit unavailable")
    excluded = 1.0 - pos.size / vals.size
    logv = np.log(pos)
    lo, hi = float(pos.min()), float(pos.max())
    if lo == hi:
        edges = np.geomspace(lo * 0.5, hi * 2.0, bins + 1)
    else:
        edges = np.geomspace(lo, hi, bins + 1)
    counts, edges = np.histogram(pos, bins=edges)
    density = counts / (pos.size * np.diff(edges))
    return SpectrumDensity(
        bin_edges=edges,
        counts=counts,
        density=density,
        log_mean=float(logv.mean()),
        log_std=float(logv.std()),
        excluded_fraction=float(excluded),
        n_values=int(vals.size),
    )
