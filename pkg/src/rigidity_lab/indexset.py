"""Truncated index sets, dyadic block analysis and lacunary decomposition."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .series import power_series


class DomainError(ValueError):
    """Raised when an operation is applied outside its mathematical domain."""


@dataclass(frozen=True)
class IndexSet:
    """A finite, strictly increasing set of non-negative integer exponents."""

    elements: tuple[int, ...] = ()

    def __post_init__(self):
        elems = tuple(int(e) for e in self.elements)
        for e, orig in zip(elems, self.elements):
            if e != orig:
                raise TypeError(f"index set elements must be integers, got {orig!r}")
        if elems and elems[0] < 0:
            raise ValueError("index set elements must be non-negative")
        if any(b <= a for a, b in zip(elems, elems[1:])):
            raise ValueError("index set elements must be strictly increasing")
        object.__setattr__(self, "elements", elems)

    @classmethod
    def of(cls, values: Iterable[int]) -> IndexSet:
        """Build from any iterable, sorting and dropping duplicates."""
        return cls(tuple(sorted({int(v) for v in values})))

    @classmethod
    def full(cls, max_: int) -> IndexSet:
        return cls(tuple(range(max_ + 1)))

    @classmethod
    def powers(cls, base: int, max_exp: int, min_exp: int = 0) -> IndexSet:
        if base < 2:
            raise ValueError("powers base must be >= 2")
        return cls(tuple(base**k for k in range(min_exp, max_exp + 1)))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, item):
        i = bisect.bisect_left(self.elements, item)
        return i < len(self.elements) and self.elements[i] == item

    @property
    def max(self) -> int:
        if not self.elements:
            raise ValueError("empty index set has no maximum")
        return self.elements[-1]

    def truncate(self, cap: int) -> IndexSet:
        """Elements ``<= cap``."""
        return IndexSet(tuple(e for e in self.elements if e <= cap))

    def without_zero(self) -> IndexSet:
        return IndexSet(tuple(e for e in self.elements if e != 0))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.elements, dtype=np.int64)

    def to_json(self) -> list[int]:
        return list(self.elements)

    @classmethod
    def from_json(cls, obj) -> IndexSet:
        """Parse either a plain integer array or a generator shorthand.

        Accepted shorthands::

            {"kind": "full", "max": N}
            {"kind": "powers", "base": b, "max_exp": m}
            {"kind": "explicit", "elements": [...]}
            {"kind": "bernoulli", "max": N, "seed": s}
        """
        if isinstance(obj, (list, tuple)):
            return cls(tuple(obj))
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError(f"cannot interpret index set {obj!r}")
        kind = obj["kind"]
        if kind == "full":
            return cls.full(int(obj["max"]))
        if kind == "powers":
            return cls.powers(int(obj.get("base", 2)), int(obj["max_exp"]), int(obj.get("min_exp", 0)))
        if kind == "explicit":
            return cls(tuple(obj["elements"]))
        if kind == "bernoulli":
            from .random_subset import sample_lambda
            from .rng import RngState

            return sample_lambda(int(obj["max"]), RngState(int(obj.get("seed", 0)))).elements
        raise ValueError(f"unknown index set kind {kind!r}")


def gap_ratio(lam: IndexSet) -> float:
    """Minimum ratio of consecutive elements.

    This is the finite-set surrogate for the liminf of consecutive ratios.
    Singletons give ``inf``.
    """
    if len(lam) == 0:
        raise ValueError("gap ratio of an empty set is undefined")
    if lam.elements[0] == 0:
        raise DomainError("gap ratio is undefined for sets containing 0; strip it first")
    e = lam.elements
    if len(e) == 1:
        return math.inf
    return min(b / a for a, b in zip(e, e[1:]))


def block_index(k: int) -> int:
    """Index n of the dyadic block [2**n, 2**(n+1)) holding ``k >= 1``."""
    return int(k).bit_length() - 1


def dyadic_block_counts(lam: IndexSet, n_max: int) -> list[int]:
    """Counts ``|lam ∩ [2**n, 2**(n+1))|`` for ``n = 0..n_max``."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    counts = [0] * (n_max + 1)
    for k in lam:
        if k >= 1:
            n = block_index(k)
            if n <= n_max:
                counts[n] += 1
    return counts


def decompose_lacunary(lam: IndexSet) -> list[IndexSet]:
    """Split ``lam`` into pieces with consecutive ratios at least 2.

    Elements are grouped by the parity of their dyadic block index; within a
    parity class the i-th smallest element of every block goes to piece i.
    Two members of one piece therefore lie in blocks at least two apart.
    A leading 0 becomes its own singleton piece.
    """
    pieces: list[IndexSet] = []
    if 0 in lam:
        pieces.append(IndexSet((0,)))
    buckets: dict[tuple[int, int], list[int]] = {}
    rank_in_block: dict[int, int] = {}
    for k in lam:
        if k == 0:
            continue
        n = block_index(k)
        i = rank_in_block.get(n, 0)
        rank_in_block[n] = i + 1
        buckets.setdefault((n % 2, i), []).append(k)
    for key in sorted(buckets):
        pieces.append(IndexSet(tuple(buckets[key])))
    return pieces


def merge_pieces(pieces: Sequence[IndexSet]) -> list[IndexSet]:
    """Greedily merge pieces whose union still has gap ratio at least 2.

    Pieces are scanned in order and each is folded into the first earlier
    piece it combines with.  Merging never uses the one-element prefix
    allowance, so every merged piece has ratio >= 2 throughout.
    """
    merged: list[tuple[int, ...]] = []
    for p in pieces:
        for i, q in enumerate(merged):
            cand = tuple(sorted(q + p.elements))
            if 0 not in cand and gap_ratio(IndexSet(cand)) >= 2:
                merged[i] = cand
                break
        else:
            merged.append(p.elements)
    return [IndexSet(m) for m in merged]


def verify_decomposition(lam: IndexSet, pieces: Sequence[IndexSet]) -> list[str]:
    """Brute-force check of the decomposition postconditions.

    Returns a list of human-readable violations; empty means the pieces are
    pairwise disjoint, cover ``lam`` exactly, and every piece with two or more
    elements has gap ratio >= 2 after dropping at most one leading element.
    """
    problems = []
    union: set[int] = set()
    for p in pieces:
        union.update(p.elements)
    if union != set(lam.elements):
        problems.append("union of pieces differs from the input")
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            common = set(pieces[i].elements) & set(pieces[j].elements)
            if common:
                problems.append(f"pieces {i} and {j} share {sorted(common)}")
    for i, p in enumerate(pieces):
        if not _piece_is_lacunary(p.elements):
            problems.append(f"piece {i} {list(p.elements)} has a consecutive ratio below 2")
    return problems


def _piece_is_lacunary(elems) -> bool:
    for drop in (0, 1):
        tail = elems[drop:]
        if len(tail) <= 1:
            return True
        if tail[0] != 0 and gap_ratio(IndexSet(tail)) >= 2:
            return True
    return False


def default_bloch_grid(cap: int) -> np.ndarray:
    """Radii ``1 - 2**(-j/4)`` for ``j = 0..4*log2(cap)+8``."""
    j_max = int(4 * math.log2(cap)) + 8 if cap >= 2 else 8
    return 1.0 - 2.0 ** (-np.arange(j_max + 1) / 4.0)


def bloch_norm_estimate(lam: IndexSet, cap: int, grid=None) -> float:
    """Grid lower bound for ``sup_t (1-t) f'(t)`` of the truncated series.

    ``f`` is the indicator power series ``sum_{n in lam, n <= cap} z**n``.
    Its coefficients are non-negative, so the supremum over the disc is
    attained on the radius [0, 1).
    """
    t = default_bloch_grid(cap) if grid is None else np.asarray(grid, dtype=float)
    if t.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(t < 0) or np.any(t >= 1):
        raise ValueError("grid radii must lie in [0, 1)")
    exps = np.array([n for n in lam.truncate(cap) if n >= 1], dtype=float)
    if exps.size == 0:
        return 0.0
    deriv = power_series(t, exps - 1, exps)
    return float(np.max((1.0 - t) * deriv))
