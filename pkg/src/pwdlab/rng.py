"""Deterministic random stream derivation.

Every stage of every trial owns a private generator derived from the master
seed and an integer path, never from another stream's state. Adding or
reordering parallelism therefore cannot change results: the stream for
(trial 7, stage LAB, event 3) is the same whether trials run serially or in
a pool.
"""

from __future__ import annotations

import numpy as np

# Stage identifiers used as path components by the pipelines.
STAGE_GEN = 0
STAGE_LAB = 1
STAGE_ERM = 2
STAGE_SEPARATE = 3
STAGE_DIRECT = 4
STAGE_SELECT = 5
STAGE_MIX = 6
STAGE_VERIFY = 7


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator at an integer path under the master seed."""
    if master_seed < 0:
        raise ValueError("master seed must be nonnegative")
    key = tuple(int(p) for p in path)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


class StreamTree:
    """A node in the seed tree; children are addressed by integer indices."""

    __slots__ = ("_seed", "_path")

    def __init__(self, master_seed: int, _path: tuple[int, ...] = ()):
        self._seed = int(master_seed)
        self._path = _path

    def child(self, *idx: int) -> "StreamTree":
        return StreamTree(self._seed, self._path + tuple(int(i) for i in idx))

    def generator(self) -> np.random.Generator:
        return derive_rng(self._seed, *self._path)

    @property
    def path(self) -> tuple[int, ...]:
        return self._path

    def __repr__(self) -> str:  # pragma: no cover
        return f"StreamTree(seed={self._seed}, path={self._path})"
