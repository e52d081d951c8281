"""Seed derivation and per-run random streams.

Every run owns one ``numpy.random.Generator`` seeded from
``run_seed(base, run)``. The seed depends on neither the scheme nor the
speed: run ``k`` sees the same geometry, shadowing and fading innovations
at every point of the sweep (common random numbers), comparisons between
schemes and speeds can be paired run by run, and a partial sweep
reproduces the matching rows of a full one.

Draw order inside a run (part of the reproducibility contract):

1. subpath gains ``(B, L)`` then subpath angles ``(B, L, 4)``,
2. shadowing ``(B,)``,
3. then, per block of ``BLOCK`` slots: fading innovations ``(BLOCK, B, L)``
   followed by background-activity uniforms ``(BLOCK, B)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SubpathSet, complex_normal, draw_subpaths

BLOCK = 2048
_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def run_seed(base_seed: int, run: int) -> int:
    """64-bit seed of run ``run``: ``splitmix64(splitmix64(base) ^ run)``."""
    return splitmix64(splitmix64(base_seed & _MASK) ^ (run & _MASK))


@dataclass
class RunStreams:
    """Random inputs of one run, drawn lazily block by block."""

    subpaths: SubpathSet
    shadow_db: np.ndarray
    rng: np.random.Generator

    @classmethod
    def open(cls, seed: int, n_gnbs: int, n_subpaths: int, shadow_sigma_db: float):
        rng = np.random.default_rng(seed)
        subpaths = draw_subpaths(rng, n_gnbs, n_subpaths)
        shadow = rng.normal(0.0, shadow_sigma_db, size=n_gnbs)
        return cls(subpaths, shadow, rng)

    def next_block(self):
        B, L = self.subpaths.gains.shape
        w = complex_normal(self.rng, (BLOCK, B, L))
        u = self.rng.random((BLOCK, B))
        return w, u
