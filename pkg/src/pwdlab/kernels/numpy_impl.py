"""Pure-numpy implementations of the hot numeric loops.

Reference semantics for the numba backend: both implementations must agree
to floating-point round-off (integer kernels agree exactly).
"""

from __future__ import annotations

import math

import numpy as np

LOG2E = math.log2(math.e)

# Concept kind codes shared with the numba backend.
KIND_CONST0 = 0
KIND_CONST1 = 1
KIND_CONJ = 2


def conjunction_disagreements(xbits, labels, kinds, v1, v2):
    """Count label disagreements for every concept in one pass.

    xbits: (m, n) uint8 contexts, labels: (m,) uint8 noisy labels.
    kinds/v1/v2: parallel arrays encoding constants and conjunctions of one
    or two 0-based variables (v2 < 0 for singletons).
    """
    m = labels.shape[0]
    ones = int(labels.sum())
    out = np.empty(kinds.shape[0], dtype=np.int64)
    for c in range(kinds.shape[0]):
        if kinds[c] == KIND_CONST0:
            out[c] = ones
        elif kinds[c] == KIND_CONST1:
            out[c] = m - ones
        else:
            pred = xbits[:, v1[c]]
            if v2[c] >= 0:
                pred = pred & xbits[:, v2[c]]
            out[c] = int(np.count_nonzero(pred != labels))
    return out


def conjunction_eval(xbits, kinds, v1, v2):
    """Evaluate every concept on every context; returns (C, m) uint8."""
    m = xbits.shape[0]
    out = np.empty((kinds.shape[0], m), dtype=np.uint8)
    for c in range(kinds.shape[0]):
        if kinds[c] == KIND_CONST0:
            out[c] = 0
        elif kinds[c] == KIND_CONST1:
            out[c] = 1
        else:
            pred = xbits[:, v1[c]]
            if v2[c] >= 0:
                pred = pred & xbits[:, v2[c]]
            out[c] = pred
    return out


def bernoulli_log_density(y, log_b, log_c):
    """Per-row log2 density of a Bernoulli product; log_b/log_c are the
    per-coordinate log2 of bias and of (1 - bias)."""
    yf = y.astype(np.float64)
    return yf @ (log_b - log_c) + log_c.sum()


def bary_log_density(y, logtab):
    """Per-row log2 density of a b-ary product with (k, b) log2 table."""
    k = logtab.shape[0]
    gathered = logtab[np.arange(k)[None, :], y.astype(np.int64)]
    return gathered.sum(axis=1)


def gaussian_log_density(y, mean, sigma):
    """Per-row log2 density of a spherical Gaussian with shared sigma."""
    k = mean.shape[0]
    const = -0.5 * k * math.log2(2.0 * math.pi * sigma * sigma)
    sq = np.square(y - mean).sum(axis=1)
    return const - sq * (LOG2E / (2.0 * sigma * sigma))
