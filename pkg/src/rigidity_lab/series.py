"""Compensated evaluation of sparse power series.

All series in the package are finite sums ``sum_k c_k * x**n_k`` with
non-negative coefficients, evaluated in ascending exponent order.  Terms are
summed pairwise inside fixed-size blocks and the block partials are then
combined with Neumaier's compensated summation.
"""

from __future__ import annotations

import numpy as np

# Upper bound on (points x terms) materialized at once.
_MAX_CELLS = 1 << 22
_BLOCK = 128


def neumaier_sum(terms, axis=-1):
    """Compensated sum of ``terms`` along ``axis``.

    Parameters
    ----------
    terms : array_like
        Real array; summation runs along ``axis`` in index order.
    axis : int, optional
        Axis to reduce.

    Returns
    -------
    numpy.ndarray or float
        The sum with the running compensation folded in.
    """
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    total = np.zeros(terms.shape[1:])
    comp = np.zeros(terms.shape[1:])
    for term in terms:
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    out = total + comp
    return out if out.ndim else float(out)


class _Accumulator:
    """Neumaier accumulator for arrays of partial sums."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, value):
        t = self.total + value
        big = np.abs(self.total) >= np.abs(value)
        self.comp += np.where(big, (self.total - t) + value, (value - t) + self.total)
        self.total = t

    def result(self):
        return self.total + self.comp


def power_series(x, exponents, coefficients=None):
    """Evaluate ``sum_k coefficients[k] * x**exponents[k]`` elementwise.

    ``exponents`` must be sorted ascending.  ``x`` may be any real array; the
    result has the same shape.  ``0**0`` is taken as 1.
    """
    x = np.asarray(x, dtype=float)
    exps = np.asarray(exponents, dtype=float)
    coef = np.ones_like(exps) if coefficients is None else np.asarray(coefficients, dtype=float)
    flat = x.reshape(-1)
    if exps.size == 0:
        return np.zeros_like(x) if x.ndim else 0.0
    out = np.empty(flat.size)
    pts_per = max(1, _MAX_CELLS // _BLOCK)
    for p in range(0, flat.size, pts_per):
        out[p:p + pts_per] = _sum_block(flat[p:p + pts_per], exps, coef)
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def _sum_block(xs, exps, coef):
    acc = _Accumulator(xs.shape)
    step = min(_BLOCK, exps.size)
    chunk = max(step, (_MAX_CELLS // max(xs.size, 1)) // step * step)
    for lo in range(0, exps.size, chunk):
        e = exps[lo:lo + chunk]
        terms = coef[lo:lo + chunk] * np.power(xs[:, None], e[None, :])
        nblk = -(-e.size // step)
        pad = nblk * step - e.size
        if pad:
            terms = np.pad(terms, ((0, 0), (0, pad)))
        partial = terms.reshape(xs.size, nblk, step).sum(axis=2)
        for j in range(nblk):
            acc.add(partial[:, j])
    return acc.result()
