"""Adaptive tensor-product Gauss-Legendre quadrature on rectangles.

Integrands are vectorized callables ``f(t, s)`` (or ``f(t)`` in 1D) taking and
returning flat float arrays.  A cell's estimate is the Gauss rule on its four
quadrants; the error indicator is the difference from the rule on the whole
cell.  Cells holding the largest share of the error are split until the
summed indicator meets ``max(tol, rel_tol * |value|)`` or the evaluation
budget runs out.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

# Fraction of the total error indicator that one refinement sweep removes.
_MARK_FRACTION = 0.5
_MIN_WIDTH = 1e-13


@dataclass(frozen=True)
class QuadSettings:
    tol: float = 1e-9
    max_evals: int = 1_000_000
    rel_tol: float = 1e-10
    order: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be non-negative")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")
        if self.order < 2:
            raise ValueError("order must be at least 2")


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool = True

    def __add__(self, other: QuadResult) -> QuadResult:
        return QuadResult(
            self.value + other.value,
            self.abs_error_estimate + other.abs_error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )

    def scaled(self, factor: float) -> QuadResult:
        return QuadResult(self.value * factor, self.abs_error_estimate * abs(factor),
                          self.evaluations, self.converged)

    def to_json(self) -> dict:
        d = asdict(self)
        del d["converged"]
        return d


class QuadratureError(RuntimeError):
    """Raised by :func:`require_converged` when the budget was exhausted."""

    def __init__(self, result: QuadResult, what: str = "integral"):
        super().__init__(
            f"{what} did not converge: value {result.value!r}, "
            f"error estimate {result.abs_error_estimate!r} after {result.evaluations} evaluations"
        )
        self.result = result


def require_converged(result: QuadResult, what: str = "integral") -> QuadResult:
    if not result.converged:
        raise QuadratureError(result, what)
    return result


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _rule_2d(f, rects: np.ndarray, order: int) -> np.ndarray:
    """Tensor Gauss rule on each row ``(a, b, c, d)`` of ``rects``."""
    x, w = gauss_legendre(order)
    a, b, c, d = rects.T
    ht = 0.5 * (b - a)
    hs = 0.5 * (d - c)
    t = (0.5 * (a + b))[:, None] + ht[:, None] * x[None, :]
    s = (0.5 * (c + d))[:, None] + hs[:, None] * x[None, :]
    T = np.broadcast_to(t[:, :, None], (len(rects), order, order))
    S = np.broadcast_to(s[:, None, :], (len(rects), order, order))
    vals = np.asarray(f(T.reshape(-1), S.reshape(-1)), dtype=float).reshape(len(rects), order, order)
    return np.einsum("kij,i,j->k", vals, w, w) * ht * hs


def _quadrants(rects: np.ndarray) -> np.ndarray:
    """Split each rectangle into 4; result has shape (m, 4, 4)."""
    a, b, c, d = rects.T
    mt = 0.5 * (a + b)
    ms = 0.5 * (c + d)
    return np.stack([
        np.stack([a, mt, c, ms], axis=1),
        np.stack([a, mt, ms, d], axis=1),
        np.stack([mt, b, c, ms], axis=1),
        np.stack([mt, b, ms, d], axis=1),
    ], axis=1)


def integrate_cells(f, cells, settings: QuadSettings = QuadSettings(), weights=None) -> QuadResult:
    """Integrate ``f(t, s)`` over a union of rectangles ``(a, b, c, d)``.

    ``weights`` multiplies each initial cell's contribution (used to fold
    symmetric domains).  The returned value is an exactly rounded sum of the
    final cell estimates, so it does not depend on refinement order.
    """
    cells = np.asarray(cells, dtype=float).reshape(-1, 4)
    if len(cells) == 0:
        return QuadResult(0.0, 0.0, 0)
    weights = np.ones(len(cells)) if weights is None else np.asarray(weights, dtype=float)
    n = settings.order
    per_rule = n * n

    quads = _quadrants(cells)
    coarse = _rule_2d(f, cells, n)
    qvals = _rule_2d(f, quads.reshape(-1, 4), n).reshape(-1, 4)
    evals = 5 * per_rule * len(cells)

    rects = cells
    wts = weights
    fine_q = qvals  # quadrant estimates of each live rect
    err = np.abs(qvals.sum(axis=1) - coarse) * np.abs(wts)
    converged = False
    while True:
        fine = fine_q.sum(axis=1)
        value = math.fsum((fine * wts).tolist())
        total_err = math.fsum(err.tolist())
        if total_err <= max(settings.tol, settings.rel_tol * abs(value)):
            converged = True
            break
        width = np.minimum(rects[:, 1] - rects[:, 0], rects[:, 3] - rects[:, 2])
        splittable = width > _MIN_WIDTH
        if not splittable.any():
            break
        budget = (settings.max_evals - evals) // (16 * per_rule)
        if budget <= 0:
            break
        order_ = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        cum = np.cumsum(err[order_])
        k = int(np.searchsorted(cum, _MARK_FRACTION * total_err)) + 1
        k = max(1, min(k, budget, int(splittable.sum())))
        marked = np.zeros(len(rects), dtype=bool)
        marked[order_[:k]] = True

        parents = rects[marked]
        children = _quadrants(parents).reshape(-1, 4)
        child_coarse = fine_q[marked].reshape(-1)
        grand = _rule_2d(f, _quadrants(children).reshape(-1, 4), n).reshape(-1, 4)
        evals += 16 * per_rule * len(parents)
        child_w = np.repeat(wts[marked], 4)
        child_err = np.abs(grand.sum(axis=1) - child_coarse) * np.abs(child_w)

        keep = ~marked
        rects = np.concatenate([rects[keep], children])
        wts = np.concatenate([wts[keep], child_w])
        fine_q = np.concatenate([fine_q[keep], grand])
        err = np.concatenate([err[keep], child_err])
    return QuadResult(value, total_err, evals, converged)


def integrate_2d(f, t_edges, s_edges, settings: QuadSettings = QuadSettings(), symmetric=False) -> QuadResult:
    """Integrate over the grid of cells spanned by two sorted edge lists.

    With ``symmetric=True`` the integrand must satisfy ``f(t, s) = f(s, t)``
    and ``t_edges`` must equal ``s_edges``; only cells on or above the
    diagonal are integrated and off-diagonal cells are counted twice.
    """
    t_edges = np.unique(np.asarray(t_edges, dtype=float))
    s_edges = np.unique(np.asarray(s_edges, dtype=float))
    if symmetric and not np.array_equal(t_edges, s_edges):
        raise ValueError("symmetric integration needs identical edge lists")
    cells, weights = [], []
    for i in range(len(t_edges) - 1):
        for j in range(len(s_edges) - 1):
            if symmetric and j < i:
                continue
            cells.append((t_edges[i], t_edges[i + 1], s_edges[j], s_edges[j + 1]))
            weights.append(2.0 if symmetric and j > i else 1.0)
    return integrate_cells(f, cells, settings, weights)


def integrate_1d(f, edges, settings: QuadSettings = QuadSettings()) -> QuadResult:
    """Adaptive Gauss-Legendre in one variable over sorted ``edges``."""
    edges = np.unique(np.asarray(edges, dtype=float))
    n = settings.order
    x, w = gauss_legendre(n)

    def rule(iv):
        a, b = iv.T
        h = 0.5 * (b - a)
        pts = (0.5 * (a + b))[:, None] + h[:, None] * x[None, :]
        vals = np.asarray(f(pts.reshape(-1)), dtype=float).reshape(len(iv), n)
        return vals @ w * h

    def halves(iv):
        a, b = iv.T
        m = 0.5 * (a + b)
        return np.stack([np.stack([a, m], 1), np.stack([m, b], 1)], 1)

    ivs = np.stack([edges[:-1], edges[1:]], axis=1)
    if len(ivs) == 0:
        return QuadResult(0.0, 0.0, 0)
    coarse = rule(ivs)
    hv = rule(halves(ivs).reshape(-1, 2)).reshape(-1, 2)
    evals = 3 * n * len(ivs)
    err = np.abs(hv.sum(1) - coarse)
    converged = False
    while True:
        value = math.fsum(hv.reshape(-1).tolist())
        total_err = math.fsum(err.tolist())
        if total_err <= max(settings.tol, settings.rel_tol * abs(value)):
            converged = True
            break
        splittable = (ivs[:, 1] - ivs[:, 0]) > _MIN_WIDTH
        budget = (settings.max_evals - evals) // (4 * n)
        if budget <= 0 or not splittable.any():
            break
        order_ = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        cum = np.cumsum(err[order_])
        k = int(np.searchsorted(cum, _MARK_FRACTION * total_err)) + 1
        k = max(1, min(k, budget, int(splittable.sum())))
        marked = np.zeros(len(ivs), dtype=bool)
        marked[order_[:k]] = True
        children = halves(ivs[marked]).reshape(-1, 2)
        child_coarse = hv[marked].reshape(-1)
        grand = rule(halves(children).reshape(-1, 2)).reshape(-1, 2)
        evals += 4 * n * int(marked.sum())
        keep = ~marked
        ivs = np.concatenate([ivs[keep], children])
        hv = np.concatenate([hv[keep], grand])
        err = np.concatenate([err[keep], np.abs(grand.sum(1) - child_coarse)])
    return QuadResult(value, total_err, evals, converged)


def graded_edges(lo: float, hi: float, toward: float = 1.0, ratio: float = 0.5) -> np.ndarray:
    """Edges in ``[lo, hi]`` whose spacing shrinks geometrically toward ``toward``.

    Edge k sits at ``toward - (toward - lo) * ratio**k``; this matches the
    natural length scale ``1 - t`` of integrands built from ``1/(1 - st)``.
    """
    if not lo < hi <= toward:
        raise ValueError("need lo < hi <= toward")
    edges = [lo]
    gap = toward - lo
    while True:
        gap *= ratio
        e = toward - gap
        if e >= hi or gap < _MIN_WIDTH:
            break
        edges.append(e)
    edges.append(hi)
    return np.asarray(edges)
