"""Deterministic compensated summation.

Neumaier's variant of Kahan summation, applied term by term in a fixed order along one
axis and vectorized over the remaining axes, so repeated runs give identical bits.
"""

import numpy as np


def two_sum(u: np.ndarray, v: np.ndarray):
    """Error-free transformation: u + v = s + t exactly."""
    s = u + v
    up = s - v
    vpp = s - up
    t = (u - up) + (v - vpp)
    return s, t


def compensated_sum(terms: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum ``terms`` along ``axis`` in ascending index order with a running compensation."""
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    total = np.zeros(terms.shape[1:])
    compensation = np.zeros(terms.shape[1:])
    for term in terms:
        total, err = two_sum(total, term)
        compensation += err
    return total + compensation
