"""Numba-compiled implementations of the hot numeric loops."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LOG2E = math.log2(math.e)

KIND_CONST0 = 0
KIND_CONST1 = 1
KIND_CONJ = 2


@njit(cache=True)
def conjunction_disagreements(xbits, labels, kinds, v1, v2):
    n_concepts = kinds.shape[0]
    m = labels.shape[0]
    out = np.zeros(n_concepts, dtype=np.int64)
    ones = 0
    for i in range(m):
        ones += labels[i]
    for c in range(n_concepts):
        if kinds[c] == KIND_CONST0:
            out[c] = ones
        elif kinds[c] == KIND_CONST1:
            out[c] = m - ones
        else:
            a = v1[c]
            b = v2[c]
            count = 0
            if b >= 0:
                for i in range(m):
                    pred = xbits[i, a] & xbits[i, b]
                    if pred != labels[i]:
                        count += 1
            else:
                for i in range(m):
                    if xbits[i, a] != labels[i]:
                        count += 1
            out[c] = count
    return out


@njit(cache=True)
def conjunction_eval(xbits, kinds, v1, v2):
    n_concepts = kinds.shape[0]
    m = xbits.shape[0]
    out = np.empty((n_concepts, m), dtype=np.uint8)
    for c in range(n_concepts):
        if kinds[c] == KIND_CONST0:
            for i in range(m):
                out[c, i] = 0
        elif kinds[c] == KIND_CONST1:
            for i in range(m):
                out[c, i] = 1
        else:
            a = v1[c]
            b = v2[c]
            if b >= 0:
                for i in range(m):
                    out[c, i] = xbits[i, a] & xbits[i, b]
            else:
                for i in range(m):
                    out[c, i] = xbits[i, a]
    return out


@njit(cache=True)
def bernoulli_log_density(y, log_b, log_c):
    m, k = y.shape
    out = np.empty(m, dtype=np.float64)
    for i in range(m):
        s = 0.0
        for j in range(k):
            if y[i, j] != 0:
                s += log_b[j]
            else:
                s += log_c[j]
        out[i] = s
    return out


@njit(cache=True)
def bary_log_density(y, logtab):
    m, k = y.shape
    out = np.empty(m, dtype=np.float64)
    for i in range(m):
        s = 0.0
        for j in range(k):
            s += logtab[j, y[i, j]]
        out[i] = s
    return out


@njit(cache=True)
def gaussian_log_density(y, mean, sigma):
    m, k = y.shape
    const = -0.5 * k * math.log2(2.0 * math.pi * sigma * sigma)
    scale = LOG2E / (2.0 * sigma * sigma)
    out = np.empty(m, dtype=np.float64)
    for i in range(m):
        sq = 0.0
        for j in range(k):
            d = y[i, j] - mean[j]
            sq += d * d
        out[i] = const - sq * scale
    return out
