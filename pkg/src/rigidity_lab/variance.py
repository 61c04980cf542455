"""Variance of radial linear statistics under sub-Bergman projection DPPs.

For a radial profile ``phi`` the angular integrals collapse and

    Var S_phi = 2 int_0^1 int_0^1 (phi(t) - phi(s))**2 W(ts) t s dt ds,

with ``W = angular_avg_sq``.  The comparison integrals below replace ``W``
by the Bloch-type majorants used to bound it.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hyperbolic import Cutoff, c2_constant, eval_cutoff, lemma_bounds
from .kernel import KernelSpec, angular_avg_sq
from .quadrature import QuadResult, QuadSettings, graded_edges, integrate_2d


@dataclass(frozen=True)
class RadialStatistic:
    """A bounded radial test function vanishing beyond ``r_max``.

    ``profile`` maps an array of radii to values.  ``breakpoints`` lists radii
    where the profile is not smooth (jumps or kinks); quadrature splits there.
    A profile that is constant on all of [0, 1) may use ``r_max = 1``.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    r_max: float
    breakpoints: tuple[float, ...] = ()
    description: str = ""

    def __post_init__(self):
        if not 0 < self.r_max <= 1:
            raise ValueError("r_max must lie in (0, 1]")
        if any(not 0 < b <= self.r_max for b in self.breakpoints):
            raise ValueError("breakpoints must lie in (0, r_max]")

    def __call__(self, t):
        return np.asarray(self.profile(np.asarray(t, dtype=float)), dtype=float)

    def edges(self) -> np.ndarray:
        """Quadrature edges: breakpoints, refined geometrically toward 1."""
        knots = sorted({0.0, *self.breakpoints, self.r_max, 1.0})
        edges = [0.0]
        for a, b in zip(knots, knots[1:]):
            if b < 1.0:
                edges.extend(graded_edges(a, b, toward=1.0)[1:])
            else:
                edges.extend([0.5 * (a + b), b])
        return np.unique(edges)


def cutoff_statistic(r0: float, r: float) -> RadialStatistic:
    c = Cutoff(r0, r)
    return RadialStatistic(lambda t: eval_cutoff(c, t), r, (r0, r), f"cutoff(r0={r0}, r={r})")


def indicator_statistic(r: float) -> RadialStatistic:
    """Counting statistic of the disc ``{|z| <= r}``."""
    if not 0 < r < 1:
        raise ValueError("indicator radius must lie in (0, 1)")
    return RadialStatistic(lambda t: (t <= r).astype(float), r, (r,), f"indicator(r={r})")


def constant_statistic(value: float) -> RadialStatistic:
    return RadialStatistic(lambda t: np.full_like(t, float(value)), 1.0, (), f"constant({value})")


def zero_statistic() -> RadialStatistic:
    return constant_statistic(0.0)


def _difference_integral(phi: RadialStatistic, weight, quad: QuadSettings) -> QuadResult:
    def f(t, s):
        d = phi(t) - phi(s)
        return d * d * weight(t, s)

    edges = phi.edges()
    return integrate_2d(f, edges, edges, quad, symmetric=True)


def variance_radial(spec: KernelSpec, phi: RadialStatistic, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """``Var S_phi`` under the DPP of ``spec``."""
    return _difference_integral(phi, lambda t, s: 2.0 * angular_avg_sq(spec, t, s) * t * s, quad)


def bloch_bound_integral(phi: RadialStatistic, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """``int int (phi(t) - phi(s))**2 / (1 - st)**2``."""
    return _difference_integral(phi, lambda t, s: (1.0 - s * t) ** -2, quad)


def bernoulli_expected_variance(phi: RadialStatistic, quad: QuadSettings = QuadSettings()) -> QuadResult:
    """Mean of ``Var S_phi`` over the random index set with P[n in L] = 1/(n+1).

    Averaging ``W`` over the random set gives ``sum (n+1) x**n = (1-x)**-2``
    at ``x = (ts)**2``.
    """
    return _difference_integral(phi, lambda t, s: 2.0 * t * s / (1.0 - (t * s) ** 2) ** 2, quad)


@dataclass(frozen=True)
class SweepRow:
    r: float
    variance: QuadResult
    bloch_bound: QuadResult
    bound_II: float
    bound_III: float
    eps_flags: tuple[tuple[float, bool], ...] = field(default=())

    @property
    def converged(self) -> bool:
        return self.variance.converged and self.bloch_bound.converged

    def flags_text(self) -> str:
        return ";".join(f"{eps!r}:{int(ok)}" for eps, ok in self.eps_flags)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "variance": self.variance.to_json(),
            "bloch_bound": self.bloch_bound.to_json(),
            "bound_II": self.bound_II,
            "bound_III": self.bound_III,
            "eps_flags": {repr(eps): ok for eps, ok in self.eps_flags},
        }


def rigidity_sweep(spec: KernelSpec, r0: float, rs: Sequence[float], quad: QuadSettings = QuadSettings(),
                   eps: Sequence[float] = (), workers: int = 1) -> list[SweepRow]:
    """Variance of the cutoff statistic for each outer radius in ``rs``.

    Each row flags, for every requested ``eps``, whether the variance fell
    below it.  Rows are independent and may be computed on ``workers`` threads.
    """
    rs = [float(r) for r in rs]
    if not rs:
        return []
    if not r0 < min(rs):
        raise ValueError(f"r0 ({r0}) must be smaller than every sweep radius")
    c2 = c2_constant(quad).value

    def row(r):
        phi = cutoff_statistic(r0, r)
        var = variance_radial(spec, phi, quad)
        bb = bloch_bound_integral(phi, quad)
        b2, b3 = lemma_bounds(Cutoff(r0, r), c2)
        return SweepRow(r, var, bb, b2, b3, tuple((float(e), var.value < e) for e in eps))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, rs))
    return [row(r) for r in rs]


SWEEP_HEADER = ("r", "variance", "bloch_bound", "bound_II", "bound_III", "eps_flags")


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for row in rows:
        w.writerow([repr(row.r), repr(row.variance.value), repr(row.bloch_bound.value),
                    repr(row.bound_II), repr(row.bound_III), row.flags_text()])
    return buf.getvalue()


def sweep_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps({"rows": [row.to_json() for row in rows]}, indent=2) + "\n"
