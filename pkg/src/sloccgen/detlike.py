"""Determinant-like function of a square matrix: permanent for bosons, determinant for fermions."""

from __future__ import annotations

import enum
import functools
import itertools

import numpy as np

from .errors import NonSquare, OrderTooLarge

MAX_ORDER = 16
MAX_NAIVE_ORDER = 8
# Ryser batches allocate batch * 2**n * n complex numbers at a time
_RYSER_BUDGET = 1 << 22


class Statistics(enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"

    @property
    def eta(self) -> int:
        return 1 if self is Statistics.BOSON else -1

    @classmethod
    def parse(cls, value) -> "Statistics":
        if isinstance(value, Statistics):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown statistics {value!r}; expected 'boson' or 'fermion'") from None


def _as_square(m, max_order: int) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NonSquare(f"expected a non-empty square matrix, got shape {a.shape}")
    if a.shape[0] > max_order:
        raise OrderTooLarge(f"order {a.shape[0]} exceeds the limit {max_order}")
    return a


@functools.lru_cache(maxsize=None)
def _ryser_subsets(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Indicator matrix of all non-empty column subsets and their Ryser signs."""
    masks = np.arange(1, 1 << n)
    indicator = ((masks[:, None] >> np.arange(n)) & 1).astype(complex)
    sizes = indicator.real.sum(axis=1).astype(int)
    signs = np.where((n - sizes) % 2 == 0, 1.0, -1.0)
    return indicator, signs


def permanent(a: np.ndarray) -> complex:
    """Ryser's inclusion-exclusion formula, O(2^n * n), vectorized over subsets."""
    return complex(permanent_batch(a[None])[0])


def permanent_batch(a: np.ndarray) -> np.ndarray:
    """Permanents of a stack of square matrices with shape (batch, n, n)."""
    n = a.shape[-1]
    indicator, signs = _ryser_subsets(n)
    chunk = max(1, _RYSER_BUDGET // ((1 << n) * n))
    out = np.empty(a.shape[0], dtype=complex)
    for start in range(0, a.shape[0], chunk):
        block = a[start:start + chunk]
        # row_sums[b, i, s] = sum of row i of matrix b restricted to subset s; one flat GEMM
        row_sums = (block.reshape(-1, n) @ indicator.T).reshape(block.shape[0], n, -1)
        out[start:start + chunk] = np.prod(row_sums, axis=1) @ signs
    return out


def determinant(a: np.ndarray) -> complex:
    """LU factorization with partial pivoting, O(n^3)."""
    return complex(determinant_batch(a[None])[0])


def determinant_batch(a: np.ndarray) -> np.ndarray:
    """Determinants of a stack of matrices with shape (batch, n, n)."""
    return np.linalg.det(np.asarray(a, dtype=complex))


def eta_det(m, stats: Statistics) -> complex:
    """Permanent (bosons) or determinant (fermions) of a square matrix.

    Parameters
    ----------
    m : array_like
        Square complex matrix of order at most 16.
    stats : Statistics

    Returns
    -------
    complex
    """
    a = _as_square(m, MAX_ORDER)
    if stats is Statistics.BOSON:
        return permanent(a)
    return determinant(a)


def eta_det_batch(a, stats: Statistics) -> np.ndarray:
    """Vectorized eta_det over a stack of matrices with shape (batch, n, n)."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[1] < 1:
        raise NonSquare(f"expected a stack of square matrices, got shape {a.shape}")
    if a.shape[1] > MAX_ORDER:
        raise OrderTooLarge(f"order {a.shape[1]} exceeds the limit {MAX_ORDER}")
    if stats is Statistics.BOSON:
        return permanent_batch(a)
    return determinant_batch(a)


def permutation_parity(perm) -> int:
    """Return +1 for an even permutation and -1 for an odd one."""
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def eta_det_naive(m, stats: Statistics) -> complex:
    """Reference value: explicit sum over all n! permutations weighted by eta**parity."""
    a = _as_square(m, MAX_NAIVE_ORDER)
    n = a.shape[0]
    rows = np.arange(n)
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = np.prod(a[rows, perm])
        if stats is Statistics.FERMION:
            term *= permutation_parity(perm)
        total += term
    return complex(total)
