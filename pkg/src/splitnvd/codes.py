"""Constellations and the 2x2, N=2 golden NVD parallel / split NVD parallel codes.

Symbol order is frozen: ``s1..s8`` fill one ``Xi`` block in reading order
(``s1..s4`` build the diagonal entries, ``s5..s8`` the off-diagonal ones).  The
split scheme takes ``s1..s8`` for sub-code 1 and ``s9..s16`` for sub-code 2.
Codebook index ``k`` is the base-``|A|`` number whose most significant digit is
the constellation index of ``s1``.

Sub-channel ``n`` carries row-block ``n`` of the transmitted matrix, so every
sub-channel block has shape ``n_t x (N*T)``::

    block-diagonal:  X_0 = [Xi, 0],              X_1 = [0, tau(Xi)]
    split:           X_0 = [Xi1, Xi2] / sqrt(2), X_1 = [tau(Xi2), tau(Xi1)] / sqrt(2)
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from .algebra import (
    ALPHA,
    GaussianInt,
    RingElement,
    RingMatrix,
    mul_coeffs,
    sigma_coeffs,
    zeta_coeffs,
)

__all__ = [
    "Scheme",
    "Constellation",
    "CodeSpec",
    "Codeword",
    "Codebook",
    "DeskScaleExceeded",
    "DESK_SCALE_LIMIT",
    "XI_SCALE",
    "SPLIT_SCALE",
    "build_constellation",
    "build_xi",
    "xi_coeffs",
    "exact_blocks",
    "encode",
    "generator",
    "normalize_codebook",
    "enumerate_codebook",
    "constellation_size_for_rate",
    "golden_pair",
]

DESK_SCALE_LIMIT = 2**24
XI_SCALE = 1 / math.sqrt(5)
SPLIT_SCALE = 1 / math.sqrt(2)


class DeskScaleExceeded(ValueError):
    """Raised when a codebook is too large to enumerate exhaustively."""


class Scheme(str, enum.Enum):
    BLOCK_DIAG = "block_diag"
    SPLIT = "split"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        aliases = {
            "block_diag": cls.BLOCK_DIAG, "blockdiag": cls.BLOCK_DIAG, "blockdiagnvd": cls.BLOCK_DIAG,
            "parallel": cls.BLOCK_DIAG, "nvd": cls.BLOCK_DIAG,
            "split": cls.SPLIT, "splitnvd": cls.SPLIT,
        }
        key = str(value).lower().replace("-", "_")
        if key not in aliases and key.replace("_", "") not in aliases:
            raise ValueError(f"unknown scheme {value!r} (expected 'block_diag' or 'split')")
        return aliases.get(key) or aliases[key.replace("_", "")]


def _gray_to_binary(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def _pam_levels(bits: int) -> list[int]:
    levels = 2**bits
    return [2 * _gray_to_binary(g) - (levels - 1) for g in range(levels)]


@dataclass(frozen=True)
class Constellation:
    """Finite symbol alphabet; index ``k`` is the Gray label of ``points[k]``."""

    name: str
    points: tuple[complex, ...]

    @classmethod
    def from_points(cls, points: Sequence[complex], name: str = "custom") -> "Constellation":
        return cls(name, tuple(complex(p) for p in points))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(self.size)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    @property
    def average_energy(self) -> float:
        return float(np.mean(np.abs(self.array) ** 2))

    @property
    def max_energy(self) -> float:
        return float(np.max(np.abs(self.array) ** 2))

    @property
    def mean(self) -> complex:
        return complex(np.mean(self.array))

    @cached_property
    def gaussian_points(self) -> tuple[GaussianInt, ...]:
        """Points as Gaussian integers; raises if any point is not one."""
        return tuple(GaussianInt.coerce(p) for p in self.points)

    @property
    def is_integral(self) -> bool:
        try:
            self.gaussian_points
        except ValueError:
            return False
        return True

    def scaled(self, c: float) -> "Constellation":
        return Constellation(f"{self.name}*{c:g}", tuple(c * p for p in self.points))

    def differences(self) -> tuple[complex, ...]:
        """Distinct values ``a - b`` over all point pairs, sorted deterministically."""
        diffs = {a - b for a in self.points for b in self.points}
        return tuple(sorted(diffs, key=lambda z: (abs(z), z.real, z.imag)))


def build_constellation(bits_per_symbol: int) -> Constellation:
    """BPSK ``{-1, +1}`` for 1 bit, otherwise square QAM on the odd-integer grid."""
    if bits_per_symbol == 1:
        return Constellation("BPSK", (-1 + 0j, 1 + 0j))
    if bits_per_symbol not in (2, 4, 6):
        raise ValueError(f"unsupported constellation: {bits_per_symbol} bits per symbol")
    half = bits_per_symbol // 2
    levels = _pam_levels(half)
    pts = tuple(complex(i_lvl, q_lvl) for i_lvl in levels for q_lvl in levels)
    name = "QPSK" if bits_per_symbol == 2 else f"{2**bits_per_symbol}-QAM"
    return Constellation(name, pts)


@dataclass(frozen=True)
class CodeSpec:
    scheme: Scheme
    constellation: Constellation
    N: int = 2
    n_t: int = 2
    T: int = 2

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if (self.N, self.n_t, self.T) != (2, 2, 2):
            raise ValueError(
                f"only the N=2, n_t=2, T=2 golden instance is constructible, got "
                f"N={self.N}, n_t={self.n_t}, T={self.T}"
            )

    @classmethod
    def golden(cls, scheme, bits_per_symbol: int) -> "CodeSpec":
        return cls(Scheme.parse(scheme), build_constellation(bits_per_symbol))

    @property
    def num_symbols(self) -> int:
        per_block = self.T * self.N * self.n_t
        return per_block if self.scheme is Scheme.BLOCK_DIAG else self.N * per_block

    @property
    def T_total(self) -> int:
        return self.N * self.T

    @property
    def codebook_size(self) -> int:
        return self.constellation.size ** self.num_symbols

    @property
    def bits_per_codeword(self) -> float:
        return self.num_symbols * self.constellation.bits_per_symbol

    @property
    def bpcu(self) -> float:
        return self.bits_per_codeword / self.T_total

    @property
    def structural_scale(self) -> float:
        return XI_SCALE * (SPLIT_SCALE if self.scheme is Scheme.SPLIT else 1.0)

    def describe(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "constellation": self.constellation.name,
            "points": [[p.real, p.imag] for p in self.constellation.points],
            "N": self.N, "n_t": self.n_t, "T": self.T,
        }


def golden_pair(bpcu: int = 4) -> tuple[CodeSpec, CodeSpec]:
    """(split, block-diagonal) specs carrying the same rate; 4 or 8 bpcu."""
    if bpcu == 4:
        return CodeSpec.golden(Scheme.SPLIT, 1), CodeSpec.golden(Scheme.BLOCK_DIAG, 2)
    if bpcu == 8:
        return CodeSpec.golden(Scheme.SPLIT, 2), CodeSpec.golden(Scheme.BLOCK_DIAG, 4)
    raise ValueError("golden pairs exist for 4 and 8 bpcu only")


# ---------------------------------------------------------------------------
# exact construction
# ---------------------------------------------------------------------------

def xi_coeffs(s: Sequence[tuple]) -> tuple[tuple, tuple, tuple, tuple]:
    """Unnormalized ``Xi`` entries (row-major) from 8 symbols given as (re, im) pairs.

    Items may be ints or int64 arrays, so the same kernel drives the scalar
    construction and vectorized exhaustive searches.
    """
    if len(s) != 8:
        raise ValueError(f"Xi takes 8 symbols, got {len(s)}")
    u = tuple(x for pair in s[:4] for x in pair)
    v = tuple(x for pair in s[4:] for x in pair)
    alpha = ALPHA.coeffs
    x0 = mul_coeffs(alpha, u)
    x1 = mul_coeffs(alpha, v)
    return x0, x1, zeta_coeffs(sigma_coeffs(x1)), sigma_coeffs(x0)


def build_xi(symbols: Sequence) -> tuple[RingMatrix, np.ndarray]:
    """Exact unnormalized ``Xi`` and its ``1/sqrt(5)``-scaled complex embedding."""
    gs = [GaussianInt.coerce(s) for s in symbols]
    e = xi_coeffs([(g.re, g.im) for g in gs])
    exact = RingMatrix([
        [RingElement.from_coeffs(e[0]), RingElement.from_coeffs(e[1])],
        [RingElement.from_coeffs(e[2]), RingElement.from_coeffs(e[3])],
    ])
    return exact, exact.embed(XI_SCALE)


def exact_blocks(spec: CodeSpec, values: Sequence) -> list[RingMatrix]:
    """Unnormalized per-sub-channel blocks for Gaussian-integer symbol values.

    The real factor ``spec.structural_scale`` (and the power scale) is not part
    of the ring and must be applied separately.
    """
    if len(values) != spec.num_symbols:
        raise ValueError(f"{spec.scheme.value} code takes {spec.num_symbols} symbols, got {len(values)}")
    if spec.scheme is Scheme.BLOCK_DIAG:
        xi, _ = build_xi(values)
        zero = RingMatrix.zeros(2, 2)
        return [xi.hstack(zero), zero.hstack(xi.tau())]
    xi1, _ = build_xi(values[:8])
    xi2, _ = build_xi(values[8:])
    return [xi1.hstack(xi2), xi2.tau().hstack(xi1.tau())]


@dataclass(frozen=True)
class Codeword:
    """One codeword: ``blocks[n]`` is the ``n_t x T_total`` matrix sent on sub-channel n."""

    blocks: np.ndarray
    symbols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def N(self) -> int:
        return self.blocks.shape[0]

    def block_diagonal(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.blocks) ** 2))

    def __sub__(self, other: "Codeword") -> "Codeword":
        return Codeword(self.blocks - other.blocks)


def _check_indices(spec: CodeSpec, symbols) -> np.ndarray:
    idx = np.asarray(symbols)
    if idx.shape != (spec.num_symbols,):
        raise ValueError(f"{spec.scheme.value} code takes {spec.num_symbols} symbols, got shape {idx.shape}")
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError("symbols must be constellation indices (integers)")
    if idx.min(initial=0) < 0 or idx.max(initial=0) >= spec.constellation.size:
        raise ValueError(f"symbol index outside the {spec.constellation.name} alphabet")
    return idx.astype(np.int64)


def generator(spec: CodeSpec) -> np.ndarray:
    """Complex generator ``G`` of shape (K, N, n_t, T_total), structural scale only.

    Every codeword is ``sum_k s_k G[k]`` before power normalization.
    """
    return _generator_cached(spec.scheme, spec.N, spec.n_t, spec.T).copy()


_GEN_CACHE: dict = {}


def _generator_cached(scheme: Scheme, N: int, n_t: int, T: int) -> np.ndarray:
    key = (scheme, N, n_t, T)
    if key not in _GEN_CACHE:
        spec = CodeSpec(scheme, build_constellation(1), N, n_t, T)
        K = spec.num_symbols
        G = np.empty((K, N, n_t, spec.T_total), dtype=complex)
        for k in range(K):
            unit = [0] * K
            unit[k] = 1
            G[k] = np.stack([b.embed(spec.structural_scale) for b in exact_blocks(spec, unit)])
        G.setflags(write=False)
        _GEN_CACHE[key] = G
    return _GEN_CACHE[key]


def normalize_codebook(spec: CodeSpec) -> float:
    """Power scale making the uniform-codebook mean of sum_n ||X_n||_F^2 equal T_total*N.

    Uses the exact second moment of i.i.d. uniform symbols, so the constraint
    holds with equality (an enumeration over the codebook gives the same value).
    """
    G = _generator_cached(spec.scheme, spec.N, spec.n_t, spec.T).reshape(spec.num_symbols, -1)
    gram = G.conj() @ G.T  # gram[k, l] = <G_l, G_k>
    mu = spec.constellation.mean
    var = spec.constellation.average_energy - abs(mu) ** 2
    ones = np.ones(spec.num_symbols)
    avg = var * np.trace(gram).real + (abs(mu) ** 2) * (ones @ gram @ ones).real
    if not avg > 1e-300:
        raise ValueError("degenerate codebook: average codeword energy is zero")
    return math.sqrt(spec.T_total * spec.N / avg)


def encode(spec: CodeSpec, symbols, *, normalized: bool = True) -> Codeword:
    """Codeword for constellation indices ``symbols`` (power-normalized by default)."""
    idx = _check_indices(spec, symbols)
    values = spec.constellation.array[idx]
    blocks = np.tensordot(values, _generator_cached(spec.scheme, spec.N, spec.n_t, spec.T), axes=1)
    if normalized:
        blocks = blocks * normalize_codebook(spec)
    return Codeword(blocks, idx)


def check_desk_scale(spec: CodeSpec, limit: int = DESK_SCALE_LIMIT) -> int:
    size = spec.codebook_size
    if size > limit:
        raise DeskScaleExceeded(
            f"desk-scale exceeded: {spec.scheme.value} code over {spec.constellation.name} has "
            f"{size} codewords (limit {limit})"
        )
    return size


def index_to_digits(index, base: int, length: int) -> np.ndarray:
    """Base-``base`` digits of ``index`` (most significant first); vectorized."""
    index = np.asarray(index, dtype=np.int64)
    powers = base ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (index[..., None] // powers) % base


class Codebook:
    """Power-normalized linear codebook of a :class:`CodeSpec`."""

    def __init__(self, spec: CodeSpec, limit: int = DESK_SCALE_LIMIT):
        self.spec = spec
        self.size = check_desk_scale(spec, limit)
        self.power_scale = normalize_codebook(spec)
        self.generator = generator(spec) * self.power_scale
        self.points = spec.constellation.array
        self.num_symbols = spec.num_symbols

    def __len__(self) -> int:
        return self.size

    def digits(self, index) -> np.ndarray:
        return index_to_digits(index, self.spec.constellation.size, self.num_symbols)

    def words(self, indices) -> np.ndarray:
        """Codeword blocks for an array of indices: shape (..., N, n_t, T_total)."""
        values = self.points[self.digits(indices)]
        return np.tensordot(values, self.generator, axes=1)

    def word(self, index: int) -> Codeword:
        return Codeword(self.words(index), self.digits(index))

    def all_words(self) -> np.ndarray:
        return self.words(np.arange(self.size))


def enumerate_codebook(spec: CodeSpec, limit: int = DESK_SCALE_LIMIT) -> Iterator[Codeword]:
    """Every normalized codeword once, in symbol-lexicographic order."""
    check_desk_scale(spec, limit)
    scale = normalize_codebook(spec)
    G = _generator_cached(spec.scheme, spec.N, spec.n_t, spec.T) * scale
    pts = spec.constellation.array
    for combo in itertools.product(range(spec.constellation.size), repeat=spec.num_symbols):
        idx = np.array(combo, dtype=np.int64)
        yield Codeword(np.tensordot(pts[idx], G, axes=1), idx)


def constellation_size_for_rate(scheme, r: float, snr: float, N: int, n_t: int) -> float:
    """|A| needed to carry multiplexing gain ``r`` per sub-channel at linear ``snr``.

    Block-diagonal: ``snr**(r/n_t)``; split: ``snr**(r/(N*n_t))``.
    """
    scheme = Scheme.parse(scheme)
    if snr <= 1:
        raise ValueError("snr must exceed 1")
    if r < 0:
        raise ValueError("multiplexing gain must be non-negative")
    exponent = r / n_t if scheme is Scheme.BLOCK_DIAG else r / (N * n_t)
    return float(snr**exponent)
