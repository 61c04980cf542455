"""The Bernoulli random index set and its dyadic block statistics.

Index ``n`` belongs to the random set independently with probability
``1/(n+1)``.  Blocks here are the left-open intervals ``(2**n, 2**(n+1)]``;
the counts ``N_n`` over these blocks are independent, and their number can
exceed any fixed bound only if the set is not a finite union of lacunary sets.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .indexset import IndexSet
from .rng import RngState, as_rng_state

# Draws per random stream in batched simulations; fixed so results do not
# depend on the number of workers.
CHUNK = 256


@dataclass(frozen=True)
class BernoulliDraw:
    n_max: int
    rng: RngState
    elements: IndexSet

    def to_json(self) -> dict:
        return {"lambda": self.elements.to_json(), "seed": self.rng.seed,
                "stream": list(self.rng.stream), "n_max": self.n_max}


def membership(u: np.ndarray) -> np.ndarray:
    """Indicators ``u[..., n] < 1/(n+1)`` along the last axis."""
    n = np.arange(u.shape[-1], dtype=float)
    return u < 1.0 / (n + 1.0)


def sample_lambda(n_max: int, rng) -> BernoulliDraw:
    """Draw membership of each ``n <= n_max``, one uniform per index in order."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    rng = as_rng_state(rng)
    u = rng.generator().random(n_max + 1)
    return BernoulliDraw(n_max, rng, IndexSet(tuple(np.flatnonzero(membership(u)).tolist())))


def block_bounds(n: int) -> tuple[int, int]:
    """First and last index of the block ``(2**n, 2**(n+1)]``."""
    return 2**n + 1, 2 ** (n + 1)


def _check_range(n_max: int, n_range) -> tuple[int, int]:
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 0 or hi < lo:
        raise ValueError(f"invalid block range {n_range!r}")
    if 2 ** (hi + 1) > n_max:
        raise ValueError(f"block {hi} reaches {2 ** (hi + 1)}, beyond the draw's n_max={n_max}")
    return lo, hi


def _as_draw(d) -> BernoulliDraw:
    if isinstance(d, BernoulliDraw):
        return d
    if isinstance(d, IndexSet):
        return BernoulliDraw(d.max if len(d) else 0, RngState(0), d)
    raise TypeError(f"expected BernoulliDraw or IndexSet, got {type(d).__name__}")


def block_counts(d, n_range) -> list[int]:
    """``N_n = |L ∩ (2**n, 2**(n+1)]|`` for ``n`` in the inclusive ``n_range``.

    ``d`` is a draw or a deterministic :class:`IndexSet` (whose maximum then
    plays the role of ``n_max``).
    """
    d = _as_draw(d)
    lo, hi = _check_range(d.n_max, n_range)
    counts = [0] * (hi - lo + 1)
    for k in d.elements:
        if k <= 2 ** lo:
            continue
        n = (k - 1).bit_length() - 1
        if n > hi:
            break
        counts[n - lo] += 1
    return counts


def harmonic_number(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def block_mean(n: int) -> float:
    """``E[N_n] = sum over the block of 1/(k+1)``; tends to log 2."""
    a, b = block_bounds(n)
    return math.fsum(1.0 / (k + 1) for k in range(a, b + 1))


def block_law_exact(n: int, c_max: int) -> np.ndarray:
    """Exact ``P[N_n = c]`` for ``c = 0..c_max`` (Poisson-binomial recursion)."""
    a, b = block_bounds(n)
    probs = np.zeros(c_max + 1)
    probs[0] = 1.0
    for k in range(a, b + 1):
        p = 1.0 / (k + 1)
        probs[1:] = probs[1:] * (1 - p) + probs[:-1] * p
        probs[0] *= 1 - p
    return probs


def lower_bound_constant(c: int) -> float:
    """``1 / (2**c c! e)``: limit of the lower bound for ``P[N_n = c]``."""
    return 1.0 / (2**c * math.factorial(c) * math.e)


def poisson_block_limit(c: int) -> float:
    """Limit of ``P[N_n = c]``: Poisson with mean log 2."""
    lam = math.log(2.0)
    return math.exp(-lam) * lam**c / math.factorial(c)


def _block_chunk(args):
    rng, n, chunk, rows = args
    n_max = 2 ** (n + 1)
    a, b = block_bounds(n)
    u = rng.spawn(chunk).generator().random((rows, n_max + 1))
    return membership(u)[:, a:b + 1].sum(axis=1)


def simulate_block_counts(n: int, trials: int, rng, workers: int = 1) -> np.ndarray:
    """``N_n`` from ``trials`` independent full draws with ``n_max = 2**(n+1)``.

    Draw ``i`` is row ``i % CHUNK`` of stream ``i // CHUNK``.
    """
    rng = as_rng_state(rng)
    jobs = [(rng, n, j, min(CHUNK, trials - j * CHUNK)) for j in range(-(-trials // CHUNK))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_chunk, jobs))
    else:
        parts = [_block_chunk(job) for job in jobs]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


@dataclass(frozen=True)
class BlockLaw:
    c: int
    n: int
    trials: int
    freq_eq: float
    freq_ge: float
    std_error: float
    std_error_ge: float
    exact_eq: float
    lower_bound_limit: float
    poisson_limit: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def empirical_block_law(c: int, n: int, trials: int, rng, workers: int = 1) -> BlockLaw:
    """Frequencies of ``N_n = c`` and ``N_n >= c`` over independent draws.

    Alongside the frequencies the record carries the exact probability of
    ``N_n = c``, the limit ``1/(2**c c! e)`` of the lower bound for it, and the
    Poisson(log 2) limit of the probability itself.
    """
    if c < 1:
        raise ValueError("C must be >= 1")
    if trials < 100:
        raise ValueError("trials must be at least 100")
    counts = simulate_block_counts(n, trials, rng, workers)
    eq = float(np.mean(counts == c))
    ge = float(np.mean(counts >= c))
    return BlockLaw(
        c, n, trials, eq, ge,
        math.sqrt(eq * (1 - eq) / trials), math.sqrt(ge * (1 - ge) / trials),
        float(block_law_exact(n, c)[c]), lower_bound_constant(c), poisson_block_limit(c),
    )


def _size_chunk(args):
    rng, n_max, chunk, rows = args
    u = rng.spawn(chunk).generator().random((rows, n_max + 1))
    return membership(u).sum(axis=1)


def realized_sizes(n_max: int, draws: int, rng, workers: int = 1) -> np.ndarray:
    """``|L ∩ [0, n_max]|`` for ``draws`` independent draws."""
    rng = as_rng_state(rng)
    jobs = [(rng, n_max, j, min(CHUNK, draws - j * CHUNK)) for j in range(-(-draws // CHUNK))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_size_chunk, jobs))
    else:
        parts = [_size_chunk(job) for job in jobs]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


@dataclass(frozen=True)
class Witness:
    found: bool
    blocks: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {"found": self.found, "blocks": [list(b) for b in self.blocks]}


def non_lacunarity_witness(d, c: int, n_range) -> Witness:
    """Blocks in ``n_range`` holding at least ``c`` elements of the draw."""
    d = _as_draw(d)
    lo, _ = _check_range(d.n_max, n_range)
    counts = block_counts(d, n_range)
    hits = tuple((lo + i, k) for i, k in enumerate(counts) if k >= c)
    return Witness(bool(hits), hits)
