"""Exact arithmetic in the ring Z[i][zeta8, theta].

Elements are stored in the ordered basis ``{1, zeta8, theta, zeta8*theta}``
with Gaussian-integer coordinates, where ``zeta8 = exp(i*pi/4)`` (so
``zeta8**2 = i``) and ``theta`` is the golden ratio (``theta**2 = 1 + theta``).

Two Galois automorphisms over Q(i) are provided:

* :func:`sigma` fixes ``zeta8`` and sends ``theta`` to its conjugate ``1 - theta``;
* :func:`tau` fixes ``theta`` and sends ``zeta8`` to ``-zeta8``.

The low-level ``*_coeffs`` helpers operate on flat 8-tuples
``(re0, im0, re1, im1, re2, im2, re3, im3)`` whose items may be Python
integers or ``int64`` numpy arrays.  The scalar classes use them with Python
integers (arbitrary precision); batch searches use them with numpy arrays,
in which case every multiplication is bound-checked so that int64 overflow
raises instead of wrapping.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GaussianInt",
    "RingElement",
    "RingMatrix",
    "NonGaussianResidueError",
    "ring_mul",
    "sigma",
    "tau",
    "det_exact",
    "embed",
    "mul_coeffs",
    "sigma_coeffs",
    "tau_coeffs",
    "ZETA8",
    "THETA",
    "I_UNIT",
    "ALPHA",
    "ZETA8_COMPLEX",
    "THETA_REAL",
]

ZETA8_COMPLEX = cmath.exp(1j * math.pi / 4)
THETA_REAL = (1 + math.sqrt(5)) / 2

# int64 products are checked against this before they are formed
_INT64_SAFE = 2**62
# upper bound on the number of integer products summed into one output coordinate
_TERMS_PER_COEFF = 32


class NonGaussianResidueError(ArithmeticError):
    """A determinant expected to lie in Z[i] has zeta8/theta components."""


# ---------------------------------------------------------------------------
# coefficient-level kernels (ints or int64 arrays)
# ---------------------------------------------------------------------------

def _max_abs(coeffs) -> int:
    return max(int(np.max(np.abs(c))) if isinstance(c, np.ndarray) else abs(int(c)) for c in coeffs)


def _check_overflow(a, b) -> None:
    if not any(isinstance(c, np.ndarray) for c in (*a, *b)):
        return
    bound = _TERMS_PER_COEFF * _max_abs(a) * _max_abs(b)
    if bound >= _INT64_SAFE:
        raise OverflowError(
            f"int64 ring product may overflow (coefficient bound {bound} >= 2**62)"
        )


def _zmul(p_re, p_im, q_re, q_im, u_re, u_im, v_re, v_im):
    """(p + q*z)(u + v*z) in Z[i][z] with z**2 = i."""
    pu_re = p_re * u_re - p_im * u_im
    pu_im = p_re * u_im + p_im * u_re
    qv_re = q_re * v_re - q_im * v_im
    qv_im = q_re * v_im + q_im * v_re
    # i * qv = (-qv_im, qv_re)
    c0_re = pu_re - qv_im
    c0_im = pu_im + qv_re
    c1_re = p_re * v_re - p_im * v_im + q_re * u_re - q_im * u_im
    c1_im = p_re * v_im + p_im * v_re + q_re * u_im + q_im * u_re
    return c0_re, c0_im, c1_re, c1_im


def mul_coeffs(a: Sequence, b: Sequence) -> tuple:
    """Product of two coefficient 8-tuples under zeta8**2 = i, theta**2 = 1 + theta."""
    _check_overflow(a, b)
    a_lo, a_hi = a[:4], a[4:]
    b_lo, b_hi = b[:4], b[4:]
    ll = _zmul(*a_lo, *b_lo)
    hh = _zmul(*a_hi, *b_hi)
    lh = _zmul(*a_lo, *b_hi)
    hl = _zmul(*a_hi, *b_lo)
    # (A + B t)(C + D t) = (AC + BD) + (AD + BC + BD) t
    lo = tuple(x + y for x, y in zip(ll, hh))
    hi = tuple(x + y + z for x, y, z in zip(lh, hl, hh))
    return lo + hi


def add_coeffs(a: Sequence, b: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def sub_coeffs(a: Sequence, b: Sequence) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def sigma_coeffs(a: Sequence) -> tuple:
    """theta -> 1 - theta: A + B*theta becomes (A + B) - B*theta."""
    return (
        a[0] + a[4], a[1] + a[5], a[2] + a[6], a[3] + a[7],
        -a[4], -a[5], -a[6], -a[7],
    )


def tau_coeffs(a: Sequence) -> tuple:
    """zeta8 -> -zeta8."""
    return (a[0], a[1], -a[2], -a[3], a[4], a[5], -a[6], -a[7])


def zeta_coeffs(a: Sequence) -> tuple:
    """Multiply by zeta8 (cheap shift: zeta8 * zeta8 = i)."""
    # (p + q z) z = i q + p z
    return (-a[3], a[2], a[0], a[1], -a[7], a[6], a[4], a[5])


def embed_coeffs(a: Sequence):
    """Complex value of a coefficient tuple (scalar or array)."""
    c0 = a[0] + 1j * a[1]
    c1 = a[2] + 1j * a[3]
    c2 = a[4] + 1j * a[5]
    c3 = a[6] + 1j * a[7]
    return c0 + c1 * ZETA8_COMPLEX + (c2 + c3 * ZETA8_COMPLEX) * THETA_REAL


# ---------------------------------------------------------------------------
# scalar types
# ---------------------------------------------------------------------------

class GaussianInt:
    """Gaussian integer ``re + im*i`` with arbitrary-precision parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: int = 0, im: int = 0):
        self.re = int(re)
        self.im = int(im)

    @classmethod
    def coerce(cls, value) -> "GaussianInt":
        if isinstance(value, GaussianInt):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value), 0)
        if isinstance(value, (complex, np.complexfloating, float, np.floating)):
            z = complex(value)
            if z.real != round(z.real) or z.imag != round(z.imag):
                raise ValueError(f"{value!r} is not a Gaussian integer")
            return cls(round(z.real), round(z.imag))
        raise TypeError(f"cannot interpret {value!r} as a Gaussian integer")

    def __add__(self, other):
        other = GaussianInt.coerce(other)
        return GaussianInt(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianInt.coerce(other)
        return GaussianInt(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianInt.coerce(other) - self

    def __neg__(self):
        return GaussianInt(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianInt.coerce(other)
        return GaussianInt(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def exact_div(self, other) -> "GaussianInt":
        other = GaussianInt.coerce(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian integer")
        num = self * other.conjugate()
        if num.re % n or num.im % n:
            raise ArithmeticError(f"{self} is not divisible by {other} in Z[i]")
        return GaussianInt(num.re // n, num.im // n)

    def __complex__(self):
        return complex(self.re, self.im)

    def __bool__(self):
        return bool(self.re or self.im)

    def __eq__(self, other):
        try:
            other = GaussianInt.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return f"{self.re}"
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


class RingElement:
    """Element ``c0 + c1*zeta8 + c2*theta + c3*zeta8*theta`` with c_k in Z[i].

    Instances are immutable; arithmetic is exact.
    """

    __slots__ = ("_c",)

    def __init__(self, c0=0, c1=0, c2=0, c3=0):
        coords = [GaussianInt.coerce(c) for c in (c0, c1, c2, c3)]
        self._c = tuple(v for g in coords for v in (g.re, g.im))

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int]) -> "RingElement":
        obj = cls.__new__(cls)
        obj._c = tuple(int(c) for c in coeffs)
        if len(obj._c) != 8:
            raise ValueError("expected 8 integer coefficients")
        return obj

    @property
    def coeffs(self) -> tuple:
        return self._c

    @property
    def coords(self) -> tuple:
        """The four Gaussian-integer coordinates (c0, c1, c2, c3)."""
        c = self._c
        return tuple(GaussianInt(c[2 * k], c[2 * k + 1]) for k in range(4))

    c0 = property(lambda self: self.coords[0])
    c1 = property(lambda self: self.coords[1])
    c2 = property(lambda self: self.coords[2])
    c3 = property(lambda self: self.coords[3])

    @classmethod
    def coerce(cls, value) -> "RingElement":
        if isinstance(value, RingElement):
            return value
        return cls(GaussianInt.coerce(value))

    def __add__(self, other):
        return RingElement.from_coeffs(add_coeffs(self._c, RingElement.coerce(other)._c))

    __radd__ = __add__

    def __sub__(self, other):
        return RingElement.from_coeffs(sub_coeffs(self._c, RingElement.coerce(other)._c))

    def __rsub__(self, other):
        return RingElement.coerce(other) - self

    def __neg__(self):
        return RingElement.from_coeffs(-c for c in self._c)

    def __mul__(self, other):
        return RingElement.from_coeffs(mul_coeffs(self._c, RingElement.coerce(other)._c))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not ring elements")
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sigma(self) -> "RingElement":
        return RingElement.from_coeffs(sigma_coeffs(self._c))

    def tau(self) -> "RingElement":
        return RingElement.from_coeffs(tau_coeffs(self._c))

    def relative_norm(self) -> GaussianInt:
        """Norm down to Q(i): the product of all four Galois conjugates."""
        s = self.sigma()
        n = self * s * self.tau() * s.tau()
        return n.as_gaussian()

    def is_gaussian(self) -> bool:
        return not any(self._c[2:])

    def as_gaussian(self) -> GaussianInt:
        if not self.is_gaussian():
            raise NonGaussianResidueError(f"non-Gaussian residue in {self!r}")
        return GaussianInt(self._c[0], self._c[1])

    def exact_div(self, other) -> "RingElement":
        """Exact quotient ``self / other``; raises if it leaves the ring."""
        other = RingElement.coerce(other)
        s = other.sigma()
        cofactor = s * other.tau() * s.tau()
        n = (other * cofactor).as_gaussian()
        num = self * cofactor
        return RingElement(*(g.exact_div(n) for g in num.coords))

    def __complex__(self):
        return complex(embed_coeffs(self._c))

    def __bool__(self):
        return any(self._c)

    def __eq__(self, other):
        try:
            other = RingElement.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(self._c)

    def __repr__(self):
        terms = []
        for g, name in zip(self.coords, ("", "z8", "th", "z8*th")):
            if g:
                terms.append(f"{g!r}*{name}" if name else f"{g!r}")
        return "RingElement(" + (" + ".join(terms) if terms else "0") + ")"


ZERO = RingElement()
ONE = RingElement(1)
I_UNIT = RingElement(GaussianInt(0, 1))
ZETA8 = RingElement(0, 1)
THETA = RingElement(0, 0, 1)
# alpha = 1 + i - i*theta
ALPHA = RingElement(GaussianInt(1, 1), 0, GaussianInt(0, -1))


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    return RingElement.coerce(a) * RingElement.coerce(b)


def sigma(a: RingElement) -> RingElement:
    return RingElement.coerce(a).sigma()


def tau(a: RingElement) -> RingElement:
    return RingElement.coerce(a).tau()


def embed(a: RingElement, scale: float = 1.0) -> complex:
    """Complex double value of ``a`` (times an optional real scale)."""
    return scale * complex(RingElement.coerce(a))


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class RingMatrix:
    """Immutable dense matrix of :class:`RingElement` entries."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = tuple(tuple(RingElement.coerce(e) for e in row) for row in entries)
        if not rows or not rows[0]:
            raise ValueError("empty matrix")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        self.entries = rows

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @classmethod
    def identity(cls, n: int) -> "RingMatrix":
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RingMatrix":
        return cls([[ZERO] * cols for _ in range(rows)])

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def map(self, fn) -> "RingMatrix":
        return RingMatrix([[fn(e) for e in row] for row in self.entries])

    def sigma(self) -> "RingMatrix":
        return self.map(RingElement.sigma)

    def tau(self) -> "RingMatrix":
        return self.map(RingElement.tau)

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RingMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __sub__(self, other: "RingMatrix") -> "RingMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RingMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __matmul__(self, other: "RingMatrix") -> "RingMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ZERO
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return RingMatrix(out)

    def hstack(self, other: "RingMatrix") -> "RingMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch")
        return RingMatrix([r + s for r, s in zip(self.entries, other.entries)])

    def embed(self, scale: float = 1.0) -> np.ndarray:
        return scale * np.array([[complex(e) for e in row] for row in self.entries], dtype=complex)

    def det(self) -> RingElement:
        return det_exact(self)

    @staticmethod
    def block_diag(*blocks: "RingMatrix") -> "RingMatrix":
        total_cols = sum(b.cols for b in blocks)
        out = []
        offset = 0
        for b in blocks:
            for row in b.entries:
                out.append([ZERO] * offset + list(row) + [ZERO] * (total_cols - offset - b.cols))
            offset += b.cols
        return RingMatrix(out)

    def __eq__(self, other):
        return isinstance(other, RingMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"RingMatrix({self.rows}x{self.cols})"


def _det_cofactor(m: list[list[RingElement]]) -> RingElement:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = ZERO
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det_cofactor(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def _det_bareiss(m: list[list[RingElement]]) -> RingElement:
    a = [list(row) for row in m]
    n = len(a)
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if not a[k][k]:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return ZERO
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]).exact_div(prev)
        prev = a[k][k]
    d = a[n - 1][n - 1]
    return d if sign > 0 else -d


def det_exact(m: RingMatrix, *, require_gaussian: bool = False) -> RingElement:
    """Exact determinant; cofactor expansion up to 4x4, fraction-free Bareiss above.

    With ``require_gaussian=True`` the result must lie in Z[i] (as it does for a
    full block-diagonal codeword of an NVD parallel code); otherwise
    :class:`NonGaussianResidueError` is raised.
    """
    if m.rows != m.cols:
        raise ValueError(f"determinant of non-square {m.rows}x{m.cols} matrix")
    rows = [list(r) for r in m.entries]
    d = _det_cofactor(rows) if m.rows <= 4 else _det_bareiss(rows)
    if require_gaussian and not d.is_gaussian():
        raise NonGaussianResidueError(f"non-Gaussian residue in full-codeword determinant {d!r}")
    return d
