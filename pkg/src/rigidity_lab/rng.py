"""Seeded, splittable random streams.

Every random quantity in the package is drawn from a Philox generator keyed
by ``(seed, stream)``.  Work is partitioned by item index, never by worker,
so outputs do not depend on how many workers share the load.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

WORKERS_ENV = "RIGIDITY_LAB_WORKERS"


@dataclass(frozen=True)
class RngState:
    seed: int
    stream: tuple[int, ...] = ()

    def spawn(self, *key: int) -> RngState:
        """Child stream addressed by ``key`` under this one."""
        return RngState(self.seed, self.stream + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def as_rng_state(rng) -> RngState:
    if isinstance(rng, RngState):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngState(int(rng))
    raise TypeError(f"expected RngState or integer seed, got {type(rng).__name__}")


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}") from None
