"""Deterministic compensated summation.

Terms are combined in a fixed pairwise tree; every addition is an error-free
transformation (TwoSum) and the rounding errors are accumulated separately and
added back at the end.  The tree shape depends only on the number of terms, so
results are reproducible regardless of how the terms were produced.
"""

import numpy as np


def two_sum(a, b):
    """Return (s, e) with s = fl(a + b) and a + b = s + e exactly (componentwise for complex)."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def pairwise_sum(x, axis=0):
    """Compensated pairwise sum of ``x`` along ``axis``."""
    x = np.moveaxis(np.asarray(x), axis, 0)
    if x.shape[0] == 0:
        return np.zeros(x.shape[1:], dtype=x.dtype)[()] if x.ndim > 1 else x.dtype.type(0)
    errs = []
    while x.shape[0] > 1:
        k = x.shape[0] // 2
        s, e = two_sum(x[0:2 * k:2], x[1:2 * k:2])
        errs.append(e)
        if x.shape[0] % 2:
            s = np.concatenate([s, x[-1:]], axis=0)
        x = s
    total = x[0]
    if errs:
        e = np.concatenate(errs, axis=0)
        while e.shape[0] > 1:
            k = e.shape[0] // 2
            t = e[0:2 * k:2] + e[1:2 * k:2]
            e = np.concatenate([t, e[-1:]], axis=0) if e.shape[0] % 2 else t
        total = total + e[0]
    return total


def ordered_sum(terms, descending=True):
    """Sum a 1-d array after ordering by magnitude (stable on ties)."""
    terms = np.asarray(terms)
    key = np.abs(terms)
    order = np.argsort(-key if descending else key, kind="stable")
    return pairwise_sum(terms[order])
