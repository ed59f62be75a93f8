import json
from fractions import Fraction

import numpy as np
import pytest

from splitnvd import analysis
from splitnvd.analysis import (
    check_nvd_criterion, difference_vectors, dmt_blockfading_zhengtse, dmt_jensen, dmt_table,
    effective_codeword, manifold_dim, min_det_exact, ostrowski_check, outage_region_membership,
)
from splitnvd.channel import CorrelationModel, complex_normal
from splitnvd.codes import CodeSpec, Scheme, build_constellation


def test_dmt_examples():
    assert dmt_jensen(2, 2, 2, 0).d == 8
    assert dmt_jensen(2, 2, 2, 1).d == 3
    assert dmt_jensen(2, 2, 2, 2).d == 0
    assert dmt_blockfading_zhengtse(2, 2, 2, 1).d == 2
    assert dmt_blockfading_zhengtse(2, 2, 2, 0).d == 8
    with pytest.raises(ValueError):
        dmt_jensen(2, 2, 2, 3)


@pytest.mark.parametrize("N,M,m", [(1, 1, 1), (2, 2, 2), (2, 3, 2), (4, 2, 1), (3, 4, 3)])
def test_jensen_dominates_blockfading(N, M, m):
    prev = None
    for k in range(0, 4 * m + 1):
        r = Fraction(k, 4)
        dj, dz = dmt_jensen(N, M, m, r).d, dmt_blockfading_zhengtse(N, M, m, r).d
        assert dj >= dz >= 0
        if 0 < r < m and N > 1:
            assert dj > dz
        if prev is not None:
            assert dj <= prev
        prev = dj


def test_dmt_table_rows():
    rows = dmt_table(2, 2, 2)
    assert [r["r"] for r in rows] == [Fraction(k, 4) for k in range(9)]
    for row in rows:
        r = row["r"]
        assert row["d_split"] == (4 - r) * (2 - r)
        assert row["d_parallel"] == 2 * (2 - r) ** 2


def test_manifold_dim():
    assert manifold_dim(2, 2, 2, 1) == 5
    assert manifold_dim(2, 2, 2, 0) == 0
    for N, M, m in [(2, 2, 2), (3, 4, 2), (1, 3, 3)]:
        for r in range(m + 1):
            assert N * M * m - manifold_dim(N, M, m, r) == (N * M - r) * (m - r)
    with pytest.raises(ValueError):
        manifold_dim(2, 2, 2, 0.5)


def test_outage_region_membership():
    assert not outage_region_membership([0, 0], 0.5, 2)
    assert outage_region_membership([1, 1], 0, 2)
    assert not outage_region_membership([0.4, 0.7], 0.5, 2)
    assert outage_region_membership([0.6, 0.9], 0.5, 2)
    with pytest.raises(ValueError):
        outage_region_membership([1], 0, 2)


def test_difference_vectors_counts():
    pts = build_constellation(1).points  # A - A = {-2, 0, 2}
    full = sum(len(b) for b in difference_vectors(pts, 3, unit_reduce=False))
    assert full == 3 ** 3 - 1
    # real alphabet: units {+1, -1}, so half of the nonzero vectors remain
    reduced = sum(len(b) for b in difference_vectors(pts, 3))
    assert reduced == (3 ** 3 - 1) // 2
    vecs = np.concatenate(list(difference_vectors(pts, 3, batch=4)))
    assert not np.any(np.all(vecs == 0, axis=1))
    assert len({tuple(v) for v in vecs}) == len(vecs)


def test_min_det_golden():
    bpsk = min_det_exact(CodeSpec.golden(Scheme.BLOCK_DIAG, 1))
    # a single +-2 symbol difference gives det = 2^4 (3+4i), |det|^2 = 6400
    assert bpsk.min_exact_detsq == 6400 and bpsk.nvd
    assert bpsk.differences_examined == (3 ** 8 - 1) // 2
    split = min_det_exact(CodeSpec.golden(Scheme.SPLIT, 1))
    assert split.min_exact_detsq == 6400


def test_min_det_unit_reduction_is_exact():
    spec = CodeSpec.golden(Scheme.BLOCK_DIAG, 1)
    assert min_det_exact(spec, unit_reduce=False).min_exact_detsq == min_det_exact(spec).min_exact_detsq


@pytest.mark.slow
def test_min_det_qpsk_matches_bpsk():
    rep = min_det_exact(CodeSpec.golden(Scheme.BLOCK_DIAG, 2))
    assert rep.min_exact_detsq == 6400


def test_min_det_needs_integral_constellation():
    spec = CodeSpec(Scheme.BLOCK_DIAG, build_constellation(1).scaled(0.5))
    with pytest.raises(ValueError):
        min_det_exact(spec)


def test_criterion_split_reduction_matches_full_search():
    spec = CodeSpec.golden(Scheme.SPLIT, 1)
    fast = check_nvd_criterion(spec)
    slow = check_nvd_criterion(spec, reduce_split=False)
    assert fast.min_product == pytest.approx(slow.min_product, rel=1e-9)
    assert fast.nvd and fast.rate_bits == 4


def test_criterion_scale_invariant_after_normalization():
    # scaling the codebook by c scales min_product by c^(2m); normalization divides c back out
    spec = CodeSpec.golden(Scheme.BLOCK_DIAG, 1)
    scaled = CodeSpec(spec.scheme, spec.constellation.scaled(3.0))
    assert check_nvd_criterion(scaled).min_product == pytest.approx(check_nvd_criterion(spec).min_product)


def test_criterion_eigen_homogeneity():
    rng = np.random.default_rng(0)
    D = complex_normal(rng, (5, 2, 2, 4))
    base = analysis._min_eig_product(D, 2)
    assert np.allclose(analysis._min_eig_product(3 * D, 2), 3 ** 4 * base)


def test_theorem1_schedule():
    res = analysis.theorem1_schedule()
    assert [p["snr"] for p in res["points"]] == [16.0, 256.0]
    assert res["passed"]
    assert all(p["min_product"] > 0 for p in res["points"])


def test_ostrowski_examples():
    rep = ostrowski_check(np.eye(2), np.diag([1.0, 2.0]))
    assert rep.eigenvalues == pytest.approx([1, 4]) and rep.bound == pytest.approx([1, 4])
    assert rep.ok
    B = np.outer([1, 2, 0], [0, 1, 1]).astype(complex)
    rep = ostrowski_check(B, np.eye(3) + 0.1)
    assert rep.rank == 1 and rep.ok
    with pytest.raises(ValueError):
        ostrowski_check(np.eye(2), np.zeros((2, 2)))


def test_effective_codeword_examples():
    rng = np.random.default_rng(4)
    D = complex_normal(rng, (2, 2, 2))
    theta, rep = effective_codeword(np.eye(2), D)
    gram = D @ np.conj(np.swapaxes(D, -1, -2))
    assert np.allclose(theta[:2, :2], gram[0]) and np.allclose(theta[2:, 2:], gram[1])
    assert rep.eigenvalues == pytest.approx(rep.bound)
    _, rep = effective_codeword(CorrelationModel.circulant_taps(2, 1), D)
    assert rep.rank == 2 and rep.ok
    with pytest.raises(ValueError):
        effective_codeword(np.eye(2), np.zeros((2, 2, 2)))


def test_effective_codeword_full_matrix_input():
    rng = np.random.default_rng(5)
    D = complex_normal(rng, (3, 2, 3))
    from scipy.linalg import block_diag
    a, _ = effective_codeword(np.eye(3), D)
    b, _ = effective_codeword(np.eye(3), block_diag(*D), n_t=2)
    assert np.allclose(a, b)


def test_random_suites():
    for fn in (analysis.ostrowski_suite, analysis.effective_codeword_suite):
        res = fn(200, seed=3)
        assert res["violations"] == 0 and res["rank_failures"] == 0


def test_lemma1_small():
    res = analysis.lemma1_check(samples=2000, spectrum_draws=100, seed=1)
    assert res["spectrum_ok"]
    assert res["ks_pvalue"] > 1e-3


def test_power_check_and_json():
    rep = analysis.power_check(CodeSpec.golden(Scheme.SPLIT, 1))
    assert rep["passed"]
    doc = analysis.to_jsonable({"a": Fraction(1, 2), "b": np.int64(3), "c": 1 + 2j, "d": np.ones(2)})
    assert json.loads(json.dumps(doc)) == {"a": 0.5, "b": 3, "c": [1.0, 2.0], "d": [1.0, 1.0]}
