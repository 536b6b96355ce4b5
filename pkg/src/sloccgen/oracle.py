"""Brute-force reference for post-selection.

Builds the explicit (anti)symmetrized N-particle tensor over single-particle
labels ``region * 2 + spin_bit`` and applies the one-particle-per-region
projector entry by entry. Nothing here calls the determinant-like kernel or
the Gram matrix: this path exists to check them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from .detlike import Statistics
from .errors import OrderTooLarge, VanishingState
from .slocc import VANISHING_TOL, PostSelectedState
from .scheme import Scheme

MAX_ORACLE_ORDER = 5


@dataclass(frozen=True)
class DenseState:
    n: int
    amps: np.ndarray  # shape (2n,) * n

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


def _parity(perm) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(perm)), 2) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def symmetrize(s: Scheme) -> DenseState:
    """Sum over slot permutations of the product state, weighted by eta**parity."""
    n = s.n
    if n > MAX_ORACLE_ORDER:
        raise OrderTooLarge(f"dense oracle limited to n <= {MAX_ORACLE_ORDER}")
    single = [np.asarray(s.tensor[q]).reshape(2 * n) for q in range(n)]
    total = np.zeros((2 * n,) * n, dtype=complex)
    for perm in itertools.permutations(range(n)):
        product = single[perm[0]]
        for slot in range(1, n):
            product = np.multiply.outer(product, single[perm[slot]])
        weight = _parity(perm) if s.stats is Statistics.FERMION else 1
        total += weight * product
    return DenseState(n, total)


def _region_grid(n: int) -> np.ndarray:
    """regions[t0, ..., t_{n-1}] as an array of shape (2n,)*n + (n,)."""
    labels = np.arange(2 * n) // 2
    grids = np.meshgrid(*([labels] * n), indexing="ij")
    return np.stack(grids, axis=-1)


def post_select_bruteforce(s: Scheme) -> PostSelectedState:
    dense = symmetrize(s)
    n = s.n
    regions = _region_grid(n)
    one_per_region = np.all(np.sort(regions, axis=-1) == np.arange(n), axis=-1)
    projected_sq = float(np.sum(np.abs(dense.amps[one_per_region]) ** 2))
    total_sq = dense.norm_sq
    # read slot i in region i; other region orderings repeat these up to eta
    raw = np.zeros(1 << n, dtype=complex)
    for k in range(1 << n):
        index = tuple(2 * i + ((k >> i) & 1) for i in range(n))
        raw[k] = dense.amps[index]
    if projected_sq <= VANISHING_TOL or total_sq <= VANISHING_TOL:
        raise VanishingState("brute-force projection vanishes")
    # divide by n! so n_g and nu are per-ordering quantities; their ratio is the probability
    scale = factorial(n)
    return PostSelectedState(n, s.stats, raw, projected_sq / scale, total_sq / scale)
