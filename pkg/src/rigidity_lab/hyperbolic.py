"""Möbius maps, the Poincaré distance on [0, 1), and the cutoff integrals.

The cutoff ``h = h^{(r0, r)}`` equals 1 up to ``r0``, 0 beyond ``r``, and in
between falls linearly in hyperbolic distance to ``r``.  The quantity of
interest is

    J(r0, r) = int_0^1 int_0^1 |h(t) - h(s)|**2 / (1 - s t)**2 ds dt,

which splits over the ordered regions

    (I)   0 < t < r0,   r < s < 1      (closed form)
    (II)  r0 < t < s < r
    (III) r0 < t < r < s < 1
    (IV)  0 < t < r0 < s < r

so that ``J = 2 * [(I) + (II) + (III) + (IV)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadResult, QuadSettings, graded_edges, integrate_1d, integrate_2d

# Truncation point of the substituted C2 integral; the tail beyond is < 1e-22.
_C2_UMAX = 60.0


def mobius(a, b):
    """``(b - a) / (1 - a b)``: the disc automorphism sending ``a`` to 0, at ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = (b - a) / (1.0 - a * b)
    return float(out) if out.ndim == 0 else out


def poincare(t, s):
    """Poincaré distance ``log((1 + |m|) / (1 - |m|))`` with ``m = mobius(t, s)``.

    For radii in [0, 1) this equals ``log1p(2|s - t| / ((1 - max)(1 + min)))``,
    which keeps full relative accuracy as both points approach the boundary.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    lo = np.minimum(t, s)
    hi = np.maximum(t, s)
    out = np.log1p(2.0 * (hi - lo) / ((1.0 - hi) * (1.0 + lo)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Cutoff:
    r0: float
    r: float

    def __post_init__(self):
        if not 0 < self.r0 < self.r < 1:
            raise ValueError(f"cutoff needs 0 < r0 < r < 1, got r0={self.r0}, r={self.r}")

    @property
    def span(self) -> float:
        """Hyperbolic length ``rho(r0, r)`` of the transition zone."""
        return poincare(self.r0, self.r)

    def __call__(self, t):
        return eval_cutoff(self, t)


def eval_cutoff(c: Cutoff, t):
    """Value of the cutoff at radius ``t`` (vectorized)."""
    t = np.asarray(t, dtype=float)
    mid = poincare(np.clip(t, c.r0, c.r), c.r) / c.span
    out = np.where(t <= c.r0, 1.0, np.where(t >= c.r, 0.0, mid))
    return float(out) if out.ndim == 0 else out


def _check(r0, r):
    if not 0 < r0 < r < 1:
        raise ValueError(f"need 0 < r0 < r < 1, got r0={r0}, r={r}")


def lemma_integral_I(r0: float, r: float) -> float:
    """Closed form ``log((1 - r0 r) / (1 - r0))`` of region (I)."""
    _check(r0, r)
    return math.log1p(r0 * (1.0 - r) / (1.0 - r0))


def lemma_integral_I_direct(r0: float, r: float, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """Region (I) by 2D quadrature of ``(1 - st)**-2`` on ``[0, r0] x [r, 1]``."""
    _check(r0, r)
    return integrate_2d(lambda t, s: (1.0 - s * t) ** -2, [0.0, r0], [r, 1.0], quad)


def transition_edges(r0: float, r: float) -> np.ndarray:
    """Breakpoints for ``[r0, r]`` refined geometrically toward the boundary."""
    return graded_edges(r0, r, toward=1.0)


def lemma_integral_II(c: Cutoff, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """Region ``r0 < t < s < r`` with integrand ``rho(t,s)**2 / rho(r0,r)**2 / (1-st)**2``."""
    d2 = c.span ** 2

    def f(t, s):
        return poincare(t, s) ** 2 / d2 / (1.0 - s * t) ** 2

    edges = transition_edges(c.r0, c.r)
    # Half the symmetric square equals the ordered triangle.
    return integrate_2d(f, edges, edges, quad, symmetric=True).scaled(0.5)


def lemma_integral_III(c: Cutoff, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """Region ``r0 < t < r < s`` with integrand ``rho(r,t)**2 / rho(r0,r)**2 / (1-st)**2``."""
    d2 = c.span ** 2

    def f(t, s):
        return poincare(c.r, t) ** 2 / d2 / (1.0 - s * t) ** 2

    s_edges = np.linspace(c.r, 1.0, 3)
    return integrate_2d(f, transition_edges(c.r0, c.r), s_edges, quad)


def lemma_integral_IV(c: Cutoff, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """Region ``0 < t < r0 < s < r``, where ``1 - h(s) = rho(r0,s) / rho(r0,r)``."""
    d2 = c.span ** 2

    def f(t, s):
        return poincare(c.r0, s) ** 2 / d2 / (1.0 - s * t) ** 2

    return integrate_2d(f, [0.0, c.r0], transition_edges(c.r0, c.r), quad)


def _c2_integrand(u):
    # s = 1 - exp(-u): log((1+s)/(1-s)) = u + log(2 - exp(-u)), ds = exp(-u) du
    return (u + np.log1p(-np.expm1(-u))) ** 2 * np.exp(-u)


def c2_constant(quad: QuadSettings = QuadSettings()) -> QuadResult:
    """``C2 = int_0^1 rho(s, 0)**2 ds`` after removing the endpoint singularity."""
    edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, _C2_UMAX]
    res = integrate_1d(_c2_integrand, edges, quad)
    a = _C2_UMAX + math.log(2.0)
    tail = math.exp(-_C2_UMAX) * (a * a + 2 * a + 2)
    return QuadResult(res.value, res.abs_error_estimate + tail, res.evaluations, res.converged)


def lemma_bounds(c: Cutoff, c2: float) -> tuple[float, float]:
    """Upper bounds ``C2 / (2 rho)`` for (II) and ``C2 / rho**2`` for (III).

    ``rho = rho(0, mobius(r0, r))``, the hyperbolic length of the transition.
    """
    rho = poincare(0.0, mobius(c.r0, c.r))
    return c2 / (2.0 * rho), c2 / rho**2


def full_lemma_check(c: Cutoff, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """``J(r0, r)`` over the whole square, integrating the cutoff difference directly."""

    def f(t, s):
        return (eval_cutoff(c, t) - eval_cutoff(c, s)) ** 2 / (1.0 - s * t) ** 2

    edges = np.concatenate([[0.0], transition_edges(c.r0, c.r), [1.0]])
    return integrate_2d(f, edges, edges, quad, symmetric=True)


@dataclass(frozen=True)
class LemmaRow:
    r: float
    I: float
    II: QuadResult
    III: QuadResult
    IV: QuadResult
    full: QuadResult
    bound_II: float
    bound_III: float

    @property
    def converged(self) -> bool:
        return self.II.converged and self.III.converged and self.IV.converged and self.full.converged

    @property
    def decomposition_gap(self) -> float:
        """``J - 2 * (I + II + III + IV)``; zero up to quadrature error."""
        return self.full.value - 2.0 * (self.I + self.II.value + self.III.value + self.IV.value)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "I": self.I,
            "II": self.II.to_json(),
            "III": self.III.to_json(),
            "IV": self.IV.to_json(),
            "full": self.full.to_json(),
            "bound_II": self.bound_II,
            "bound_III": self.bound_III,
            "II_within_bound": self.II.value <= self.bound_II + self.II.abs_error_estimate,
            "III_within_bound": self.III.value <= self.bound_III + self.III.abs_error_estimate,
            "decomposition_gap": self.decomposition_gap,
        }


def lemma_row(r0: float, r: float, c2: float, quad: QuadSettings = QuadSettings()) -> LemmaRow:
    c = Cutoff(r0, r)
    b2, b3 = lemma_bounds(c, c2)
    return LemmaRow(r, lemma_integral_I(r0, r), lemma_integral_II(c, quad), lemma_integral_III(c, quad),
                    lemma_integral_IV(c, quad), full_lemma_check(c, quad), b2, b3)
