"""DMT formulas, NVD certification and eigenvalue-bound checkers.

Difference sets are searched instead of codeword pairs: every code here is
linear, so ``X - X_hat`` ranges over the codewords of the difference symbols
``(A - A)^K``.  Both determinants and the spectra of ``DD^H`` are unchanged
when the difference vector is multiplied by a unit ``u`` with ``|u| = 1`` and
``u**4 = 1``, so only one representative per unit orbit is visited.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from .algebra import NonGaussianResidueError, mul_coeffs, sub_coeffs, tau_coeffs
from .channel import (
    ChannelSpec,
    CorrelationModel,
    RANK_RTOL,
    build_circulant_CH,
    build_fourier_DH,
    complex_normal,
    mutual_information,
    logdet2_eye_plus,
    sample_channels,
)
from .codes import (
    Codebook,
    CodeSpec,
    Scheme,
    build_constellation,
    check_desk_scale,
    generator,
    normalize_codebook,
    xi_coeffs,
)

__all__ = [
    "DmtPoint",
    "NvdReport",
    "dmt_jensen",
    "dmt_blockfading_zhengtse",
    "dmt_table",
    "manifold_dim",
    "outage_region_membership",
    "difference_vectors",
    "min_det_exact",
    "check_nvd_criterion",
    "theorem1_schedule",
    "effective_codeword",
    "ostrowski_check",
    "ostrowski_suite",
    "effective_codeword_suite",
    "lemma1_check",
    "power_check",
    "to_jsonable",
]

EIG_RTOL = 1e-9


# ---------------------------------------------------------------------------
# closed-form DMT
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DmtPoint:
    r: float
    d: float


def _check_r(r, m):
    if not 0 <= r <= m:
        raise ValueError(f"multiplexing gain r={r} outside [0, {m}]")


def dmt_jensen(rho: int, M: int, m: int, r) -> DmtPoint:
    """(rho*M - r)(m - r)."""
    _check_r(r, m)
    return DmtPoint(r, (rho * M - r) * (m - r))


def dmt_blockfading_zhengtse(N: int, M: int, m: int, r) -> DmtPoint:
    """N(M - r)(m - r): the per-block flat-fading curve repeated N times."""
    _check_r(r, m)
    return DmtPoint(r, N * (M - r) * (m - r))


def dmt_table(N: int, n_t: int, n_r: int, step=Fraction(1, 4), rho: int | None = None) -> list[dict]:
    """Rows ``r, d_split, d_parallel`` on an exact grid r = 0, step, ..., m."""
    m, M = min(n_t, n_r), max(n_t, n_r)
    rho = N if rho is None else rho
    step = Fraction(step)
    rows = []
    k = 0
    while k * step <= m:
        r = k * step
        rows.append({
            "r": r,
            "d_split": dmt_jensen(rho, M, m, r).d,
            "d_parallel": dmt_blockfading_zhengtse(rho, M, m, r).d,
        })
        k += 1
    return rows


def manifold_dim(N: int, M: int, m: int, r: int) -> int:
    """Real-parameter count of rank-``N*r`` block circulants: N*M*r + (m - r)*r."""
    if int(r) != r:
        raise ValueError("manifold dimension needs an integer r")
    _check_r(r, m)
    r = int(r)
    return N * M * r + (m - r) * r


def outage_region_membership(alpha: Sequence[float], r: float, m: int) -> bool:
    """True iff ``sum(alpha[:k]) >= k - r`` for every k = 1..m."""
    if len(alpha) < m:
        raise ValueError(f"need at least m={m} eigen-exponents")
    total = 0.0
    for k in range(1, m + 1):
        total += alpha[k - 1]
        if total < k - r:
            return False
    return True


# ---------------------------------------------------------------------------
# difference-set enumeration
# ---------------------------------------------------------------------------

def _unit_group(diffs: Sequence[complex]) -> list[complex]:
    units = [1, -1]
    if {complex(1j * d) for d in diffs} == set(diffs):
        units += [1j, -1j]
    return units


def difference_vectors(
    alphabet: Sequence[complex],
    length: int,
    *,
    unit_reduce: bool = True,
    batch: int = 1 << 18,
) -> Iterator[np.ndarray]:
    """Batches (B, length) of nonzero difference-symbol vectors.

    With ``unit_reduce`` the first nonzero entry is restricted to one
    representative per orbit of the unit group that preserves ``A - A``.
    """
    diffs = sorted({complex(a - b) for a in alphabet for b in alphabet}, key=lambda z: (abs(z), z.real, z.imag))
    nonzero = [d for d in diffs if d != 0]
    if unit_reduce:
        units = _unit_group(diffs)
        reps, seen = [], set()
        for d in nonzero:
            if d in seen:
                continue
            reps.append(d)
            seen.update(complex(u * d) for u in units)
    else:
        reps = nonzero
    q = len(diffs)
    dv = np.array(diffs)
    suffix_len = 0
    while suffix_len < length and q ** (suffix_len + 1) <= batch:
        suffix_len += 1
    for j in range(length):
        tail = length - 1 - j
        s = min(tail, suffix_len)
        suffix = np.array(list(itertools.product(range(q), repeat=s)), dtype=np.int64).reshape(q**s, s)
        for rep in reps:
            for prefix in itertools.product(range(q), repeat=tail - s):
                out = np.zeros((len(suffix), length), dtype=complex)
                out[:, j] = rep
                if prefix:
                    out[:, j + 1:j + 1 + len(prefix)] = dv[list(prefix)]
                if s:
                    out[:, length - s:] = dv[suffix]
                yield out


def _witness_pair(alphabet: Sequence[complex], diff: Sequence[complex]) -> tuple[list[int], list[int]]:
    """Constellation indices (a, b) with points[a] - points[b] == diff entrywise."""
    pts = [complex(p) for p in alphabet]
    a_idx, b_idx = [], []
    for d in diff:
        for i, j in itertools.product(range(len(pts)), repeat=2):
            if abs(pts[i] - pts[j] - d) < 1e-9:
                a_idx.append(i)
                b_idx.append(j)
                break
        else:
            raise ValueError(f"{d} is not a difference of two constellation points")
    return a_idx, b_idx


# ---------------------------------------------------------------------------
# NVD reports
# ---------------------------------------------------------------------------

@dataclass
class NvdReport:
    scheme: str
    constellation: str
    differences_examined: int
    min_product: float | None = None
    min_exact_detsq: int | None = None
    rate_bits: float | None = None
    log2_min_product: float | None = None
    witness_difference: list = field(default_factory=list)
    witness_pair: list = field(default_factory=list)
    nvd: bool = True
    notes: str = ""


def _exact_full_det(diff: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact det(diag(Xi, tau(Xi))) in Z[i] for a batch of 8-symbol differences."""
    re = np.rint(diff.real).astype(np.int64)
    im = np.rint(diff.imag).astype(np.int64)
    if not (np.allclose(diff.real, re) and np.allclose(diff.imag, im)):
        raise ValueError("exact path needs Gaussian-integer symbol differences")
    s = [(re[:, k], im[:, k]) for k in range(8)]
    a, b, c, d = xi_coeffs(s)
    det = sub_coeffs(mul_coeffs(a, d), mul_coeffs(b, c))
    full = mul_coeffs(det, tau_coeffs(det))
    if any(np.any(x) for x in full[2:]):
        raise NonGaussianResidueError("non-Gaussian residue in a full-codeword determinant")
    return full[0], full[1]


def min_det_exact(spec: CodeSpec, *, unit_reduce: bool = True) -> NvdReport:
    """Exact minimum of |det|^2 over nonzero differences of unnormalized codewords.

    For the block-diagonal code this is det(diag(dXi, tau(dXi))).  The split
    code is a concatenation of two such NVD parallel sub-codes with the split
    constellation, so its certificate is the sub-code minimum.
    """
    check_desk_scale(spec)
    if not spec.constellation.is_integral:
        raise ValueError("exact certification needs a Gaussian-integer constellation")
    best = None
    witness = None
    count = 0
    for batch in difference_vectors(spec.constellation.points, 8, unit_reduce=unit_reduce):
        re, im = _exact_full_det(batch)
        if np.abs(re).max(initial=0) >= 2**31 or np.abs(im).max(initial=0) >= 2**31:
            raise OverflowError("determinant too large for int64 squaring")
        detsq = re * re + im * im
        k = int(np.argmin(detsq))
        if best is None or int(detsq[k]) < best:
            best = int(detsq[k])
            witness = batch[k]
        count += len(batch)
    diff = list(witness) + [0j] * (spec.num_symbols - 8)
    a, b = _witness_pair(spec.constellation.points, diff)
    return NvdReport(
        scheme=spec.scheme.value,
        constellation=spec.constellation.name,
        differences_examined=count,
        min_exact_detsq=best,
        witness_difference=[[z.real, z.imag] for z in diff],
        witness_pair=[a, b],
        nvd=best > 0,
        notes="split code certified through its NVD parallel sub-code" if spec.scheme is Scheme.SPLIT else "",
    )


def _eigvalsh_small(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a stack of Hermitian matrices; closed form for 2x2."""
    if A.shape[-1] == 2:
        a = A[..., 0, 0].real
        d = A[..., 1, 1].real
        mid = 0.5 * (a + d)
        rad = np.sqrt(0.25 * (a - d) ** 2 + np.abs(A[..., 0, 1]) ** 2)
        return np.stack([mid - rad, mid + rad], axis=-1)
    return np.linalg.eigvalsh(A)


def _min_eig_product(D: np.ndarray, m: int) -> np.ndarray:
    """Product of the m smallest eigenvalues of DD^H for a batch of block-diagonal D.

    ``D`` has shape (B, N, n_t, T); DD^H is block diagonal so its spectrum is
    the union of the per-block spectra.
    """
    gram = D @ np.conj(np.swapaxes(D, -1, -2))
    ev = _eigvalsh_small(gram).reshape(D.shape[0], -1)
    ev = np.partition(ev, m - 1, axis=1)[:, :m] if m < ev.shape[1] else ev
    return np.prod(np.clip(ev, 0.0, None), axis=1)


def check_nvd_criterion(
    spec: CodeSpec,
    m: int = 2,
    rate_bits: float | None = None,
    *,
    reduce_split: bool = True,
    unit_reduce: bool = True,
) -> NvdReport:
    """Minimum over codeword pairs of the product of the m smallest eigenvalues of DD^H.

    ``D = diag{X_n - X_hat_n}`` uses power-normalized codewords.  For the split
    code, adding the second sub-code's difference adds a PSD term to every
    diagonal block of DD^H, which can only raise each eigenvalue; hence the
    minimum is attained with one sub-code difference equal to zero and only
    8-symbol differences need to be searched (``reduce_split=False`` searches
    all of them).
    """
    G = generator(spec) * normalize_codebook(spec)
    length = spec.num_symbols
    if spec.scheme is Scheme.SPLIT and reduce_split:
        # only the 8-symbol sub-code is searched
        check_desk_scale(CodeSpec(Scheme.BLOCK_DIAG, spec.constellation, spec.N, spec.n_t, spec.T))
        G = G[:8]
        length = 8
    else:
        check_desk_scale(spec)
    best = math.inf
    witness = None
    count = 0
    for batch in difference_vectors(spec.constellation.points, length, unit_reduce=unit_reduce):
        D = np.tensordot(batch, G, axes=1)
        prod = _min_eig_product(D, m)
        k = int(np.argmin(prod))
        if prod[k] < best:
            best = float(prod[k])
            witness = batch[k]
        count += len(batch)
    rate_bits = spec.bpcu if rate_bits is None else rate_bits
    diff = list(witness) + [0j] * (spec.num_symbols - length)
    a, b = _witness_pair(spec.constellation.points, diff)
    return NvdReport(
        scheme=spec.scheme.value,
        constellation=spec.constellation.name,
        differences_examined=count,
        min_product=best,
        rate_bits=rate_bits,
        log2_min_product=math.log2(best) if best > 0 else -math.inf,
        witness_difference=[[z.real, z.imag] for z in diff],
        witness_pair=[a, b],
        nvd=best > 0,
    )


def theorem1_schedule(
    scheme=Scheme.SPLIT,
    sizes: Sequence[int] = (2, 4),
    r: float = 1.0,
    slack: float = 0.25,
) -> dict:
    """Exponent of min eigenvalue products along the rate-matched (snr, |A|) schedule.

    For each constellation size the SNR is the one at which that size carries
    multiplexing gain ``r`` (``|A|**(N n_t / r)`` for the split code,
    ``|A|**(n_t / r)`` for the block-diagonal code).  The exponent is the
    least-squares slope of ln(min_product) against ln(snr); the intercept is
    the constant offset and is reported, not tested.
    """
    scheme = Scheme.parse(scheme)
    bits_for = {2: 1, 4: 2, 16: 4, 64: 6}
    rows = []
    for size in sizes:
        spec = CodeSpec.golden(scheme, bits_for[size])
        exp = spec.N * spec.n_t / r if scheme is Scheme.SPLIT else spec.n_t / r
        snr = float(size) ** exp
        rep = check_nvd_criterion(spec, m=min(spec.n_t, 2), rate_bits=r * math.log2(snr))
        rows.append({
            "constellation_size": size,
            "snr": snr,
            "min_product": rep.min_product,
            "log_ratio": math.log(rep.min_product) / math.log(snr),
        })
    x = np.log([row["snr"] for row in rows])
    y = np.log([row["min_product"] for row in rows])
    exponent, offset = np.polyfit(x, y, 1) if len(rows) > 1 else (y[0] / x[0], 0.0)
    return {
        "scheme": scheme.value,
        "r": r,
        "points": rows,
        "exponent": float(exponent),
        "offset": float(offset),
        "required_min_exponent": -r - slack,
        "passed": bool(exponent >= -r - slack),
    }


# ---------------------------------------------------------------------------
# eigenvalue bounds
# ---------------------------------------------------------------------------

def _numeric_rank(w: np.ndarray) -> int:
    top = np.max(np.abs(w))
    if top == 0:
        return 0
    return int(np.sum(w > RANK_RTOL * top))


@dataclass
class BoundReport:
    rank: int
    expected_rank: int
    eigenvalues: list
    bound: list
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.rank == self.expected_rank


def _count_violations(lhs: np.ndarray, rhs: np.ndarray, scale: float) -> int:
    slack = EIG_RTOL * np.abs(rhs) + 1e-12 * scale
    return int(np.sum(lhs < rhs - slack))


def ostrowski_check(B: np.ndarray, C: np.ndarray) -> BoundReport:
    """Checks rank and eigenvalue lower bound for ``A = B (C C^H) B^H``.

    The k-th smallest nonzero eigenvalue of A must be at least the smallest
    nonzero eigenvalue of BB^H times the k-th smallest eigenvalue of CC^H.
    """
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    p = B.shape[0]
    if B.shape != (p, p) or C.shape != (p, p):
        raise ValueError("B and C must be square and of equal size")
    CC = C @ C.conj().T
    wc = np.linalg.eigvalsh(CC)
    if _numeric_rank(wc) < p:
        raise ValueError("C is singular")
    wb = np.linalg.eigvalsh(B @ B.conj().T)
    s = _numeric_rank(wb)
    A = B @ CC @ B.conj().T
    wa = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    rank_a = _numeric_rank(wa)
    nz = wa[-s:] if s else wa[:0]
    bound = wb[-s:].min() * wc[:s] if s else wc[:0]
    viol = _count_violations(nz, bound, float(np.abs(wa).max(initial=0.0)))
    return BoundReport(rank_a, s, nz.tolist(), bound.tolist(), viol)


def effective_codeword(R, D, n_t: int | None = None) -> tuple[np.ndarray, BoundReport]:
    """Effective codeword ``Theta = (R^{1/2} kron I) diag{dX_n dX_n^H} (R^{1/2} kron I)``.

    ``D`` is either the per-sub-channel differences (N, n_t, T) or the full
    block-diagonal matrix (then ``n_t`` is required).  Checks rank(Theta) =
    rho*n_t and lambda_i(Theta) >= sigma2 * lambda_i(DD^H) for i = 1..rho*n_t.
    """
    model = R if isinstance(R, CorrelationModel) else CorrelationModel.explicit(R)
    D = np.asarray(D, dtype=complex)
    if D.ndim == 3:
        blocks = D
    else:
        if n_t is None:
            raise ValueError("n_t is required with a full block-diagonal D")
        N = model.N
        T = D.shape[1] // N
        blocks = np.stack([D[n * n_t:(n + 1) * n_t, n * T:(n + 1) * T] for n in range(N)])
    N, nt = blocks.shape[:2]
    if N != model.N:
        raise ValueError("D and R disagree on N")
    gram_blocks = blocks @ np.conj(np.swapaxes(blocks, -1, -2))
    DD = np.zeros((N * nt, N * nt), dtype=complex)
    for n in range(N):
        DD[n * nt:(n + 1) * nt, n * nt:(n + 1) * nt] = gram_blocks[n]
    wd = np.linalg.eigvalsh(DD)
    if _numeric_rank(wd) < N * nt:
        raise ValueError("difference matrix D is rank deficient")
    S = np.kron(model.sqrt, np.eye(nt))
    theta = S @ DD @ S
    theta = 0.5 * (theta + theta.conj().T)
    wt = np.linalg.eigvalsh(theta)
    rho = model.rank
    expected = rho * nt
    nz = wt[-expected:]
    bound = model.sigma2 * wd[:expected]
    viol = _count_violations(nz, bound, float(np.abs(wt).max()))
    return theta, BoundReport(_numeric_rank(wt), expected, nz.tolist(), bound.tolist(), viol)


def _random_psd(rng: np.random.Generator, p: int, rank: int, lo=0.2, hi=2.0) -> np.ndarray:
    Q, _ = np.linalg.qr(complex_normal(rng, (p, p)))
    w = np.zeros(p)
    w[:rank] = rng.uniform(lo, hi, rank)
    return (Q * w) @ Q.conj().T


def ostrowski_suite(instances: int = 1000, seed: int = 0) -> dict:
    rng = np.random.default_rng([seed, 0x0B57])
    violations = rank_failures = 0
    for _ in range(instances):
        p = int(rng.integers(2, 7))
        s = int(rng.integers(1, p + 1))
        Q1, _ = np.linalg.qr(complex_normal(rng, (p, p)))
        Q2, _ = np.linalg.qr(complex_normal(rng, (p, p)))
        sv = np.zeros(p)
        sv[:s] = rng.uniform(0.3, 2.0, s)
        B = (Q1 * sv) @ Q2.conj().T
        C = complex_normal(rng, (p, p)) + 0.5 * np.eye(p)
        rep = ostrowski_check(B, C)
        violations += rep.violations
        rank_failures += rep.rank != rep.expected_rank
    return {"instances": instances, "seed": seed, "violations": violations, "rank_failures": rank_failures}


def effective_codeword_suite(instances: int = 1000, seed: int = 0) -> dict:
    rng = np.random.default_rng([seed, 0x7E7A])
    violations = rank_failures = 0
    for _ in range(instances):
        N = int(rng.integers(2, 5))
        nt = int(rng.integers(1, 4))
        T = nt + int(rng.integers(0, 3))
        rho = int(rng.integers(1, N + 1))
        R = _random_psd(rng, N, rho)
        D = complex_normal(rng, (N, nt, T))
        _, rep = effective_codeword(R, D)
        violations += rep.violations
        rank_failures += rep.rank != rep.expected_rank
    return {"instances": instances, "seed": seed, "violations": violations, "rank_failures": rank_failures}


# ---------------------------------------------------------------------------
# block-fading outage equivalence
# ---------------------------------------------------------------------------

def lemma1_check(
    samples: int = 10_000,
    snr_db: float = 10.0,
    seed: int = 0,
    N: int = 2,
    n_t: int = 2,
    n_r: int = 2,
    spectrum_draws: int = 1000,
    alpha: float = 0.01,
) -> dict:
    """Compare mutual information of diag{H_n} with its block-circulant form.

    Two independent sample sets are drawn: ``sum_n log2 det(I + snr/n_t H_n H_n^H)``
    over i.i.d. blocks, and ``log2 det(I + snr/(N n_t) C_H C_H^H)``.  A
    two-sample KS test must not reject at level ``alpha``.  Separately, on
    ``spectrum_draws`` draws, the spectrum of C_H C_H^H must equal N times the
    spectrum of D_H D_H^H (the Fourier blocks carry a 1/sqrt(N) factor).
    """
    snr = 10 ** (snr_db / 10)
    spec = ChannelSpec(N, n_t, n_r)
    blocks, _ = sample_channels(spec, np.random.default_rng([seed, 0]), samples)
    mi_diag = mutual_information(blocks, snr)

    rng = np.random.default_rng([seed, 1])
    white = complex_normal(rng, (samples, N, n_r, n_t))
    mi_circ = np.empty(samples)
    c = snr / (N * n_t)
    for i in range(samples):
        CH = build_circulant_CH(white[i])
        mi_circ[i] = logdet2_eye_plus(c * (CH @ CH.conj().T))
    ks = stats.ks_2samp(mi_diag, mi_circ)

    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(spectrum_draws):
        hw = complex_normal(rng, (N, n_r, n_t))
        CH = build_circulant_CH(hw)
        DH = build_fourier_DH(hw)
        wc = np.linalg.eigvalsh(CH @ CH.conj().T) / N
        wd = np.linalg.eigvalsh(DH @ DH.conj().T)
        worst = max(worst, float(np.max(np.abs(wc - wd)) / max(1.0, wd.max())))
    return {
        "samples": samples,
        "snr_db": snr_db,
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "ks_rejects": bool(ks.pvalue < alpha),
        "spectrum_draws": spectrum_draws,
        "spectrum_max_rel_error": worst,
        "spectrum_ok": worst <= 1e-9,
        "passed": bool(ks.pvalue >= alpha and worst <= 1e-9),
    }


def power_check(spec: CodeSpec) -> dict:
    """Enumerate the normalized codebook and compare its mean energy to T_total*N."""
    book = Codebook(spec)
    total = 0.0
    step = 1 << 14
    for start in range(0, book.size, step):
        words = book.words(np.arange(start, min(start + step, book.size)))
        total += float(np.sum(np.abs(words) ** 2))
    mean = total / book.size
    target = spec.T_total * spec.N
    return {
        "scheme": spec.scheme.value,
        "constellation": spec.constellation.name,
        "power_scale": book.power_scale,
        "mean_energy": mean,
        "target": target,
        "abs_error": abs(mean - target),
        "passed": abs(mean - target) <= 1e-9 * target,
    }


def to_jsonable(obj):
    """Recursively convert reports (dataclasses, numpy, Fractions) to JSON types."""
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    return obj
