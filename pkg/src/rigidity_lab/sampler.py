"""Exact sampling of finite-rank sub-Bergman DPPs and Monte Carlo statistics.

Sampling is sequential: with ``k`` points left, the next point has density
``|r(z)|**2 / k`` w.r.t. normalized area, where ``r(z)`` is the evaluation
vector ``(sqrt(n+1) z**n)_n`` with its components along previously accepted
points projected out.  Proposals come from the unconditional intensity
``K(z,z) / rank`` and are accepted with probability ``|r(z)|**2 / K(z,z)``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .kernel import KernelSpec, expected_count_in_disc
from .rng import RngState, as_rng_state

BISECTION_TOL = 1e-12
REORTH_THRESHOLD = 1e-8
# Residual norms below this fraction of |v(z)| are treated as degenerate.
DEGENERATE_THRESHOLD = 1e-13


class SamplingError(RuntimeError):
    """Orthogonalization degenerated during sampling."""


@dataclass(frozen=True, eq=False)
class Configuration:
    points: np.ndarray

    def __len__(self):
        return len(self.points)

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.points)

    def count_in_disc(self, r: float) -> int:
        return int(np.count_nonzero(self.radii <= r))


class _RadialLaw:
    """Inverse of ``F(t) = expected_count_in_disc(t) / rank`` by bisection."""

    def __init__(self, spec: KernelSpec):
        self.exp2 = 2.0 * (spec.exponents + 1.0)
        self.rank = spec.rank

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.power(t[..., None], self.exp2).sum(axis=-1) / self.rank

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        steps = int(math.ceil(math.log2(1.0 / BISECTION_TOL)))
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def sample_dpp(spec: KernelSpec, rng, batch: int | None = None) -> Configuration:
    """One configuration of the DPP with kernel ``spec``.

    ``rng`` is an :class:`RngState` (or integer seed).  Proposals are drawn in
    batches of ``batch`` triples (radius variate, angle variate, acceptance
    variate) from the state's own stream.
    """
    gen = as_rng_state(rng).generator()
    law = _RadialLaw(spec)
    n = spec.exponents
    nf = n.astype(float)
    root = np.sqrt(nf + 1.0)
    rank = spec.rank
    batch = batch or max(16, 2 * rank)

    basis = np.zeros((rank, rank), dtype=complex)  # rows: accepted residual directions
    points = []
    pending = iter(())
    while len(points) < rank:
        try:
            rad, ang, acc = next(pending)
        except StopIteration:
            u = gen.random((batch, 3))
            radii = law.inverse(u[:, 0])
            pending = iter(zip(radii, 2.0 * np.pi * u[:, 1], u[:, 2]))
            continue
        v = root * np.power(rad, nf) * np.exp(1j * nf * ang)
        k = len(points)
        q = basis[:k]
        resid = v - q.T @ (q.conj() @ v)
        kzz = float(np.vdot(v, v).real)
        res2 = float(np.vdot(resid, resid).real)
        if res2 > kzz * (1.0 + 1e-9) + 1e-300:
            raise SamplingError(f"projection norm {res2} exceeds intensity {kzz}")
        if acc * kzz >= res2:
            continue
        norm = math.sqrt(res2)
        if norm < REORTH_THRESHOLD * math.sqrt(kzz):
            resid = resid - q.T @ (q.conj() @ resid)
            norm = float(np.linalg.norm(resid))
        if norm <= DEGENERATE_THRESHOLD * math.sqrt(kzz):
            raise SamplingError(
                f"evaluation vector at z={rad * np.exp(1j * ang)!r} is numerically in the span "
                f"of {k} accepted points"
            )
        basis[k] = resid / norm
        points.append(rad * np.exp(1j * ang))
    return Configuration(np.asarray(points, dtype=complex))


def _sample_range(args):
    spec, rng, start, stop = args
    return [sample_dpp(spec, rng.spawn(i)) for i in range(start, stop)]


def sample_configurations(spec: KernelSpec, n_samples: int, rng, workers: int = 1) -> list[Configuration]:
    """``n_samples`` independent configurations; sample ``i`` uses stream ``i``."""
    rng = as_rng_state(rng)
    if n_samples <= 0:
        return []
    if workers <= 1:
        return _sample_range((spec, rng, 0, n_samples))
    step = -(-n_samples // (4 * workers))
    jobs = [(spec, rng, lo, min(lo + step, n_samples)) for lo in range(0, n_samples, step)]
    out: list[Configuration] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_sample_range, jobs):
            out.extend(part)
    return out


@dataclass(frozen=True)
class MomentStats:
    n: int
    mean: float
    variance: float | None
    std_error_mean: float | None
    std_error_var: float | None

    def to_json(self) -> dict:
        return {"n": self.n, "mean": self.mean, "variance": self.variance,
                "std_error_mean": self.std_error_mean, "std_error_var": self.std_error_var}


def moment_stats(values) -> MomentStats:
    """Sample mean and unbiased variance with standard errors.

    The variance's standard error uses the fourth central moment:
    ``Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n``.  With fewer than two values
    the variance fields are ``None``.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("need at least one value")
    mean = math.fsum(x.tolist()) / n
    if n < 2:
        return MomentStats(n, mean, None, None, None)
    d = x - mean
    var = math.fsum((d * d).tolist()) / (n - 1)
    m4 = math.fsum((d**4).tolist()) / n
    var_of_var = max(m4 - (n - 3) / (n - 1) * var * var, 0.0) / n
    return MomentStats(n, mean, var, math.sqrt(var / n), math.sqrt(var_of_var))


def mc_count_stats(spec: KernelSpec, r: float, n_samples: int, rng, workers: int = 1,
                   configurations: Sequence[Configuration] | None = None) -> MomentStats:
    """Moments of the number of points in ``{|z| <= r}``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    configs = configurations if configurations is not None else sample_configurations(spec, n_samples, rng, workers)
    return moment_stats([c.count_in_disc(r) for c in configs])


def mc_linear_stat(spec: KernelSpec, phi, n_samples: int, rng, workers: int = 1,
                   configurations: Sequence[Configuration] | None = None) -> MomentStats:
    """Moments of ``S_phi(X) = sum_i phi(|x_i|)``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    configs = configurations if configurations is not None else sample_configurations(spec, n_samples, rng, workers)
    values = [math.fsum(np.asarray(phi(c.radii), dtype=float).tolist()) for c in configs]
    return moment_stats(values)


@dataclass(frozen=True)
class RadialCheck:
    counts: np.ndarray
    expected: np.ndarray
    chi2_pvalue: float
    min_bin_pvalue: float
    alpha: float

    @property
    def passed(self) -> bool:
        nbins = len(self.counts)
        return self.chi2_pvalue > self.alpha and self.min_bin_pvalue > self.alpha / nbins


def radial_histogram_check(spec: KernelSpec, configs: Sequence[Configuration], bins: int = 20,
                           alpha: float = 0.01) -> RadialCheck:
    """Compare pooled radii with the radial density ``2t K(t,t) / rank``.

    Bins are equal-probability under the target law.  Reports the Pearson
    chi-square p-value and the smallest per-bin two-sided binomial p-value,
    the latter to be judged at the Bonferroni level ``alpha / bins``.
    """
    radii = np.concatenate([c.radii for c in configs])
    law = _RadialLaw(spec)
    edges = np.concatenate([[0.0], law.inverse(np.arange(1, bins) / bins), [1.0]])
    counts = np.histogram(radii, bins=edges)[0]
    probs = np.diff(np.concatenate([[0.0], expected_count_in_disc(spec, edges[1:-1]) / spec.rank, [1.0]]))
    expected = probs * radii.size
    chi2 = stats.chisquare(counts, expected).pvalue
    per_bin = [stats.binomtest(int(k), radii.size, float(p)).pvalue for k, p in zip(counts, probs)]
    return RadialCheck(counts, expected, float(chi2), float(min(per_bin)), alpha)


def dump_csv(configs: Sequence[Configuration]) -> str:
    """Rows ``sample_id,point_index,re,im`` with a header, LF endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample_id", "point_index", "re", "im"])
    for i, c in enumerate(configs):
        for j, z in enumerate(c.points):
            w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()
