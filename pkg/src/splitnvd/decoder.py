"""Exhaustive maximum-likelihood decoding over enumerated codebooks.

The metric of candidate ``X`` is ``sum_n ||Y_n - sqrt(snr/n_t) H_n X_n||_F^2``
and ties go to the lowest codebook index.

For linear codebooks the candidate set is handled as a product of two symbol
halves: per sub-channel, the contributions of the first and second half are
tabulated separately (``|A|**(K/2)`` rows each) and combined, which avoids
forming every ``H_n X_n``.  Sub-channel 0 is scored for every candidate; later
sub-channels are only scored for candidates whose running metric has not
already exceeded the full metric of the current leader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codes import Codebook, CodeSpec

__all__ = ["DecodeResult", "ml_decode", "ml_decode_naive", "codebook_for"]


@dataclass(frozen=True)
class DecodeResult:
    best_index: int
    best_metric: float
    # runner-up minus best; a lower bound when ``margin_exact`` is False
    metric_margin: float
    margin_exact: bool = True


@lru_cache(maxsize=8)
def codebook_for(spec: CodeSpec) -> Codebook:
    return Codebook(spec)


class _HalfTables:
    """Symbol-value tables for the two halves of a linear codebook."""

    def __init__(self, codebook: Codebook):
        q = codebook.spec.constellation.size
        K = codebook.num_symbols
        self.k_a = K // 2
        self.k_b = K - self.k_a
        self.n_b = q**self.k_b
        pts = codebook.points
        digits_a = _digits(q, self.k_a)
        digits_b = _digits(q, self.k_b)
        self.s_a = pts[digits_a]
        self.s_b = pts[digits_b]


def _digits(base: int, length: int) -> np.ndarray:
    n = base**length
    powers = base ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (np.arange(n, dtype=np.int64)[:, None] // powers) % base


def _tables(codebook: Codebook) -> _HalfTables:
    tabs = getattr(codebook, "_half_tables", None)
    if tabs is None:
        tabs = _HalfTables(codebook)
        codebook._half_tables = tabs
    return tabs


def _resolve(code):
    if isinstance(code, CodeSpec):
        return codebook_for(code)
    if isinstance(code, Codebook):
        return code
    words = np.asarray(code)
    if words.ndim != 4:
        raise ValueError("explicit codebooks must have shape (C, N, n_t, T)")
    return words


def ml_decode(y, h, code, snr: float, *, prune: bool = True) -> DecodeResult:
    """ML codeword index for received blocks ``y`` (N, n_r, T) over channel ``h``.

    ``code`` is a :class:`CodeSpec`, a :class:`Codebook` or an explicit array of
    codewords of shape (C, N, n_t, T).
    """
    book = _resolve(code)
    H = np.asarray(getattr(h, "blocks", h))
    Y = np.asarray(y)
    if isinstance(book, np.ndarray):
        return _decode_words(Y, H, book, snr, prune)
    if not prune:
        return ml_decode_naive(Y, H, book, snr)
    return _decode_linear(Y, H, book, snr)


def _scale(H: np.ndarray, snr: float) -> float:
    return math.sqrt(snr / H.shape[-1])


def _summarize(acc: np.ndarray, alive: np.ndarray, floor: float) -> DecodeResult:
    vals = acc[alive] if alive is not None else acc
    pos = int(np.argmin(vals))
    best = float(vals[pos])
    idx = int(alive[pos]) if alive is not None else pos
    if vals.size > 1:
        second = float(np.partition(vals, 1)[1])
    else:
        second = math.inf
    exact = second <= floor
    runner = min(second, floor)
    margin = runner - best if math.isfinite(runner) else math.inf
    return DecodeResult(idx, best, max(margin, 0.0), exact)


def _decode_linear(Y: np.ndarray, H: np.ndarray, book: Codebook, snr: float) -> DecodeResult:
    tabs = _tables(book)
    a = _scale(H, snr)
    N = H.shape[0]
    # HG[n, k] = a * H_n G_k[n], flattened over (n_r, T)
    HG = a * np.einsum("nrt,kntT->nkrT", H, book.generator).reshape(N, book.num_symbols, -1)
    yv = Y.reshape(N, -1)

    parts = []
    for n in range(N):
        U = tabs.s_a @ HG[n, : tabs.k_a]
        V = tabs.s_b @ HG[n, tabs.k_a:]
        R = yv[n] - U
        parts.append((R, V, np.einsum("ij,ij->i", R, R.conj()).real, np.einsum("ij,ij->i", V, V.conj()).real))

    def partial(n: int, idx: np.ndarray) -> np.ndarray:
        R, V, rr, vv = parts[n]
        i, j = np.divmod(idx, tabs.n_b)
        cross = np.einsum("ij,ij->i", R[i], V[j].conj()).real
        return np.maximum(rr[i] + vv[j] - 2.0 * cross, 0.0)

    R0, V0, rr0, vv0 = parts[0]
    acc = rr0[:, None] + vv0[None, :] - 2.0 * (R0 @ V0.conj().T).real
    acc = np.maximum(acc, 0.0).ravel()
    alive = np.arange(acc.size)
    floor = math.inf
    for n in range(1, N):
        lead = alive[np.argmin(acc[alive])]
        bound = acc[lead] + sum(partial(m, np.array([lead]))[0] for m in range(n, N))
        keep = acc[alive] <= bound
        dropped = acc[alive[~keep]]
        if dropped.size:
            floor = min(floor, float(dropped.min()))
        alive = alive[keep]
        acc[alive] += partial(n, alive)
    return _summarize(acc, alive, floor)


def ml_decode_naive(y, h, code, snr: float) -> DecodeResult:
    """Reference full scan: forms every H_n X_n and scores every candidate."""
    book = _resolve(code)
    words = book if isinstance(book, np.ndarray) else book.all_words()
    H = np.asarray(getattr(h, "blocks", h))
    Y = np.asarray(y)
    a = _scale(H, snr)
    HX = np.einsum("nrt,cntT->cnrT", H, words)
    metric = np.sum(np.abs(Y[None] - a * HX) ** 2, axis=(2, 3))
    total = metric[:, 0].copy()
    for n in range(1, metric.shape[1]):
        total += metric[:, n]
    return _summarize(total, None, math.inf)


def _decode_words(Y, H, words, snr, prune) -> DecodeResult:
    a = _scale(H, snr)
    N = H.shape[0]

    def partial(n, idx):
        return np.sum(np.abs(Y[n] - a * (H[n] @ words[idx, n])) ** 2, axis=(1, 2))

    if not prune:
        return ml_decode_naive(Y, H, words, snr)
    acc = partial(0, np.arange(len(words)))
    alive = np.arange(len(words))
    floor = math.inf
    for n in range(1, N):
        lead = alive[np.argmin(acc[alive])]
        bound = acc[lead] + sum(partial(m, np.array([lead]))[0] for m in range(n, N))
        keep = acc[alive] <= bound
        if (~keep).any():
            floor = min(floor, float(acc[alive[~keep]].min()))
        alive = alive[keep]
        acc[alive] += partial(n, alive)
    return _summarize(acc, alive, floor)
