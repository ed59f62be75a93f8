"""Correlated selective-fading MIMO channels.

The sub-channels ``H_0..H_{N-1}`` (each ``n_r x n_t``) are generated as
``[H_0 ... H_{N-1}] = H_w (R^{1/2} kron I_{n_t})`` with ``H_w`` i.i.d. CN(0, 1).
SNR values are linear everywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "CorrelationModel",
    "ChannelSpec",
    "ChannelRealization",
    "sample_channel",
    "sample_channels",
    "complex_normal",
    "apply_channel",
    "mutual_information",
    "logdet2_eye_plus",
    "build_circulant_CH",
    "build_fourier_DH",
    "fourier_blocks",
    "jensen_channel",
]

RANK_RTOL = 1e-9
SQRT_CLAMP = 1e-12


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Sub-channel correlation ``R`` (N x N, Hermitian PSD)."""

    kind: str
    matrix: np.ndarray
    taps: int | None = None

    def __post_init__(self):
        R = np.asarray(self.matrix, dtype=complex)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError(f"correlation matrix must be square, got shape {R.shape}")
        if not np.allclose(R, R.conj().T, atol=1e-9):
            raise ValueError("correlation matrix is not Hermitian")
        w = np.linalg.eigvalsh(R)
        if w.min() < -1e-9 * max(1.0, abs(w.max())):
            raise ValueError(f"correlation matrix is not positive semidefinite (min eigenvalue {w.min():.3g})")
        R.setflags(write=False)
        object.__setattr__(self, "matrix", R)

    @classmethod
    def identity(cls, N: int) -> "CorrelationModel":
        return cls("identity", np.eye(N))

    @classmethod
    def circulant_taps(cls, N: int, L: int) -> "CorrelationModel":
        """Frequency correlation of an L-tap uniform power-delay profile over N subcarriers."""
        if not 1 <= L <= N:
            raise ValueError(f"need 1 <= L <= N, got L={L}, N={N}")
        lags = np.arange(N)[:, None] - np.arange(N)[None, :]
        taps = np.arange(L)[:, None, None]
        R = np.exp(-2j * np.pi * taps * lags[None] / N).sum(axis=0) / L
        return cls("taps", R, taps=L)

    @classmethod
    def explicit(cls, R) -> "CorrelationModel":
        return cls("explicit", np.asarray(R, dtype=complex))

    @classmethod
    def from_csv(cls, path) -> "CorrelationModel":
        """Read an N x N matrix of complex entries written like ``1+0.5j``."""
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([complex(tok.strip().replace(" ", "")) for tok in line.split(",")])
        return cls.explicit(np.array(rows, dtype=complex))

    @classmethod
    def parse(cls, text: str, N: int) -> "CorrelationModel":
        """``identity``, ``taps:L`` or ``file:<path>``."""
        text = text.strip()
        if text == "identity":
            return cls.identity(N)
        if text.startswith("taps:"):
            return cls.circulant_taps(N, int(text.split(":", 1)[1]))
        if text.startswith("file:"):
            model = cls.from_csv(text.split(":", 1)[1])
            if model.N != N:
                raise ValueError(f"correlation file is {model.N}x{model.N}, expected N={N}")
            return model
        raise ValueError(f"unknown correlation model {text!r}")

    def describe(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "taps":
            return f"taps:{self.taps}"
        return "explicit:" + ";".join(",".join(repr(complex(v)) for v in row) for row in self.matrix)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def rank(self) -> int:
        w = self.eigenvalues
        return int(np.sum(w > RANK_RTOL * w.max()))

    @property
    def sigma2(self) -> float:
        """Smallest nonzero eigenvalue of R."""
        w = self.eigenvalues
        return float(w[w > RANK_RTOL * w.max()].min())

    @property
    def sqrt(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.N, dtype=complex)
        w, V = np.linalg.eigh(self.matrix)
        w = np.where(w < SQRT_CLAMP, 0.0, w)
        return (V * np.sqrt(w)) @ V.conj().T


@dataclass(frozen=True)
class ChannelSpec:
    N: int
    n_t: int
    n_r: int
    correlation: CorrelationModel = None

    def __post_init__(self):
        if self.correlation is None:
            object.__setattr__(self, "correlation", CorrelationModel.identity(self.N))
        if self.correlation.N != self.N:
            raise ValueError("correlation size does not match N")

    @property
    def m(self) -> int:
        return min(self.n_t, self.n_r)

    @property
    def M(self) -> int:
        return max(self.n_t, self.n_r)

    def describe(self) -> dict:
        return {"N": self.N, "n_t": self.n_t, "n_r": self.n_r, "correlation": self.correlation.describe()}


@dataclass(frozen=True)
class ChannelRealization:
    """``blocks[n]`` is ``H_n`` (n_r x n_t); ``h_w`` the white n_r x N*n_t generator."""

    blocks: np.ndarray
    h_w: np.ndarray = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.blocks.shape[0]

    @property
    def H(self) -> np.ndarray:
        """``[H_0 ... H_{N-1}]`` as one n_r x N*n_t matrix."""
        return np.concatenate(list(self.blocks), axis=1)

    def block_diagonal(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)


def sample_channels(spec: ChannelSpec, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """``size`` independent draws: returns (blocks (size, N, n_r, n_t), H_w (size, n_r, N*n_t))."""
    h_w = complex_normal(rng, (size, spec.n_r, spec.N * spec.n_t))
    if spec.correlation.kind == "identity":
        H = h_w
    else:
        H = h_w @ np.kron(spec.correlation.sqrt, np.eye(spec.n_t))
    blocks = H.reshape(size, spec.n_r, spec.N, spec.n_t).transpose(0, 2, 1, 3)
    return blocks, h_w


def sample_channel(spec: ChannelSpec, rng: np.random.Generator) -> ChannelRealization:
    blocks, h_w = sample_channels(spec, rng, 1)
    return ChannelRealization(blocks[0], h_w[0])


def _as_blocks(x) -> np.ndarray:
    return np.asarray(getattr(x, "blocks", x))


def apply_channel(h, x, snr: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """``Y_n = sqrt(snr/n_t) H_n X_n + Z_n``; noiseless when ``rng`` is None."""
    H = _as_blocks(h)
    X = _as_blocks(x)
    if H.shape[0] != X.shape[0] or H.shape[-1] != X.shape[-2]:
        raise ValueError(f"shape mismatch: channel {H.shape} vs codeword {X.shape}")
    n_t = H.shape[-1]
    Y = math.sqrt(snr / n_t) * (H @ X)
    if rng is not None:
        Y = Y + complex_normal(rng, Y.shape)
    return Y


def logdet2_eye_plus(A: np.ndarray) -> np.ndarray:
    """``log2 det(I + A)`` for a stack of Hermitian PSD matrices (..., k, k)."""
    k = A.shape[-1]
    if k == 1:
        return np.log2(1.0 + A[..., 0, 0].real)
    if k == 2:
        a = 1.0 + A[..., 0, 0].real
        d = 1.0 + A[..., 1, 1].real
        return np.log2(a * d - np.abs(A[..., 0, 1]) ** 2)
    sign, logabs = np.linalg.slogdet(np.eye(k) + A)
    return logabs / math.log(2)


def mutual_information(h, snr: float, denom: float | None = None) -> np.ndarray | float:
    """Bits: ``sum_n log2 det(I + (snr/denom) H_n H_n^H)``; ``denom`` defaults to n_t.

    Accepts a realization or a (..., N, n_r, n_t) stack of blocks.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    H = _as_blocks(h)
    n_r, n_t = H.shape[-2:]
    c = snr / (n_t if denom is None else denom)
    Hh = np.swapaxes(H.conj(), -1, -2)
    gram = (Hh @ H) if n_t < n_r else (H @ Hh)
    out = logdet2_eye_plus(c * gram).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def build_circulant_CH(blocks) -> np.ndarray:
    """Block circulant with first block-row ``[H_0 ... H_{N-1}]``, rows rotated right."""
    B = _as_blocks(blocks)
    N = B.shape[0]
    rows = [np.concatenate([B[(j - k) % N] for j in range(N)], axis=1) for k in range(N)]
    return np.concatenate(rows, axis=0)


def fourier_blocks(blocks) -> np.ndarray:
    """``(1/sqrt(N)) sum_l H_l w_l**k`` with ``w_l = exp(-2j pi l / N)``, k = 0..N-1."""
    B = _as_blocks(blocks)
    N = B.shape[0]
    W = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N) / math.sqrt(N)
    return np.tensordot(W, B, axes=1)


def build_fourier_DH(blocks) -> np.ndarray:
    return scipy.linalg.block_diag(*fourier_blocks(blocks))


def jensen_channel(blocks, rho: int, n_t: int, n_r: int) -> np.ndarray:
    """m x rho*M matrix built from the first ``rho`` white blocks."""
    B = _as_blocks(blocks)
    if not 1 <= rho <= B.shape[0]:
        raise ValueError(f"rho must be in [1, {B.shape[0]}]")
    if B.shape[-2:] != (n_r, n_t):
        raise ValueError(f"blocks must be {n_r}x{n_t}")
    if n_r <= n_t:
        return np.concatenate(list(B[:rho]), axis=1)
    return np.concatenate([b.conj().T for b in B[:rho]], axis=1)
