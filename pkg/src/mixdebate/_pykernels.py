"""Pure-Python/numpy implementations of the retrieval kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled kernels are checked against.
"""
from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def trigram_bucket(a: int, b: int, c: int, dim: int) -> int:
    """FNV-1a (64 bit) over three code points, each as 4 little-endian bytes."""
    h = FNV_OFFSET
    for cp in (a, b, c):
        for shift in (0, 8, 16, 24):
            h ^= (cp >> shift) & 0xFF
            h = (h * FNV_PRIME) & _MASK
    return h % dim


def trigram_counts(text: str, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=np.int64)
    cps = [ord(ch) for ch in text]
    for i in range(len(cps) - 2):
        out[trigram_bucket(cps[i], cps[i + 1], cps[i + 2], dim)] += 1
    return out


def trigram_count_matrix(texts: list[str], dim: int) -> np.ndarray:
    out = np.zeros((len(texts), dim), dtype=np.int64)
    for row, text in enumerate(texts):
        out[row] = trigram_counts(text, dim)
    return out


def count_cosine(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Cosine of integer count vectors; zero wherever either side is empty.

    Dot products and squared norms stay in exact integer arithmetic so the
    scores are bit-identical across implementations.
    """
    dots = matrix @ query
    qq = int(query @ query)
    norms = np.einsum("ij,ij->i", matrix, matrix)
    denom = np.sqrt((norms * qq).astype(np.float64))
    scores = np.zeros(matrix.shape[0], dtype=np.float64)
    nz = denom > 0
    scores[nz] = dots[nz].astype(np.float64) / denom[nz]
    return scores


def top_k(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the k best scores, descending, ties by lower index first."""
    n = scores.shape[0]
    k = min(k, n)
    order = np.lexsort((np.arange(n), -scores))[:k]
    return order.astype(np.int64), scores[order]
