import numpy as np
import pytest

from vblast.detect import (
    DetectorKind,
    MLComplexityError,
    detect,
    detect_ml,
    detect_mmse,
    detect_sic,
    detect_zf,
    ml_candidates,
    mmse_filter,
    zf_filter,
)
from vblast.linalg import RankDeficientError, ShapeError
from vblast.modem import build_constellation

from oracles import (
    brute_force_ml,
    constellation_points,
    filter_then_slice,
    mmse_matrix,
    random_cn,
    reference_sic,
    zf_matrix,
)

QPSK = build_constellation("qpsk")
KINDS = list(DetectorKind)


def _instance(rng, nr, nt, c, noise_var):
    h = random_cn(rng, (nr, nt))
    idx = rng.integers(0, c.size, nt)
    y = h @ c.points[idx] + np.sqrt(noise_var) * random_cn(rng, nr)
    return y, h, idx


def _metric(y, h, c, idx):
    r = y - h @ c.points[idx]
    return float(np.sum(np.abs(r) ** 2))


class TestML:
    @pytest.mark.parametrize("mod", ["bpsk", "qpsk", "qam16"])
    def test_noiseless_recovery(self, rng, mod):
        c = build_constellation(mod)
        for _ in range(20):
            y, h, idx = _instance(rng, 2, 2, c, 0.0)
            np.testing.assert_array_equal(detect_ml(y, h, c).symbol_indices, idx)

    def test_bpsk_identity_sign(self):
        res = detect_ml([0.2, -0.1], np.eye(2), "bpsk")
        np.testing.assert_array_equal(res.symbol_indices, [0, 1])
        np.testing.assert_array_equal(res.bits, [0, 1])

    def test_against_brute_force(self, rng):
        pts = constellation_points("qpsk")
        for _ in range(200):
            y, h, _ = _instance(rng, 2, 2, QPSK, 0.5)
            assert detect_ml(y, h, QPSK).symbol_indices.tolist() == brute_force_ml(y, h, pts)

    def test_candidate_count(self, rng):
        y, h, _ = _instance(rng, 3, 2, QPSK, 0.1)
        assert detect_ml(y, h, QPSK).ml_candidates_evaluated == 16

    def test_candidates_are_lexicographic(self):
        cand = ml_candidates("qpsk", 2)
        assert cand.shape == (16, 2)
        assert [tuple(r) for r in cand] == sorted(tuple(r) for r in cand)

    def test_tie_keeps_smallest_index_vector(self):
        # y = 0 with H = I and BPSK: all four candidates tie exactly
        res = detect_ml([0.0, 0.0], np.eye(2), "bpsk")
        np.testing.assert_array_equal(res.symbol_indices, [0, 0])

    def test_guard_limit(self):
        with pytest.raises(MLComplexityError):
            detect_ml(np.zeros(6), np.eye(6), "qam16")
        with pytest.raises(MLComplexityError):
            detect_ml(np.zeros(2), np.eye(2), "qpsk", max_candidates=15)

    def test_wide_channel_allowed(self, rng):
        bpsk = build_constellation("bpsk")
        y, h, idx = _instance(rng, 1, 2, bpsk, 0.0)
        res = detect_ml(y, h, bpsk)
        assert _metric(y, h, bpsk, res.symbol_indices) <= _metric(y, h, bpsk, idx) + 1e-20

    def test_batched(self, rng):
        h = random_cn(rng, (50, 2, 2))
        y = random_cn(rng, (50, 2))
        res = detect_ml(y, h, QPSK)
        for i in range(50):
            np.testing.assert_array_equal(res.symbol_indices[i], detect_ml(y[i], h[i], QPSK).symbol_indices)


class TestZF:
    def test_noiseless(self, rng):
        for _ in range(20):
            y, h, idx = _instance(rng, 3, 2, QPSK, 0.0)
            np.testing.assert_array_equal(detect_zf(y, h, QPSK).symbol_indices, idx)

    def test_scaled_identity(self):
        x_idx = np.array([2, 1])
        y = 2 * QPSK.points[x_idx]
        np.testing.assert_array_equal(detect_zf(y, 2 * np.eye(2), QPSK).symbol_indices, x_idx)

    def test_against_naive_path(self, rng):
        pts = constellation_points("qpsk")
        for _ in range(100):
            y, h, _ = _instance(rng, 2, 2, QPSK, 0.3)
            expected = filter_then_slice(y, zf_matrix(h), pts)
            assert detect_zf(y, h, QPSK).symbol_indices.tolist() == expected

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            detect_zf([1, 1], np.ones((2, 2)), QPSK)
        with pytest.raises(RankDeficientError):
            detect_zf([1], np.ones((1, 2)), QPSK)

    def test_scale_invariance(self, rng):
        for _ in range(50):
            y, h, _ = _instance(rng, 3, 3, QPSK, 0.4)
            c = float(rng.uniform(0.01, 100))
            np.testing.assert_array_equal(
                detect_zf(y, h, QPSK).symbol_indices, detect_zf(c * y, c * h, QPSK).symbol_indices
            )

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            detect_zf([1, 2, 3], np.eye(2), QPSK)


class TestMMSE:
    def test_zero_noise_matches_zf(self, rng):
        for _ in range(50):
            y, h, _ = _instance(rng, 2, 2, QPSK, 0.2)
            np.testing.assert_array_equal(
                detect_mmse(y, h, 0.0, 1.0, QPSK).symbol_indices,
                detect_zf(y, h, QPSK).symbol_indices,
            )

    def test_identity_halves(self):
        W = mmse_filter(np.eye(2), 1.0, 1.0)
        np.testing.assert_allclose(W @ np.array([2.0, -2.0]), [1.0, -1.0])
        res = detect_mmse([2.0, -2.0], np.eye(2), 1.0, 1.0, "bpsk")
        np.testing.assert_array_equal(res.symbol_indices, [0, 1])

    def test_against_naive_path(self, rng):
        pts = constellation_points("qpsk")
        for _ in range(100):
            y, h, _ = _instance(rng, 2, 2, QPSK, 0.3)
            expected = filter_then_slice(y, mmse_matrix(h, 0.3 / 1.0), pts)
            assert detect_mmse(y, h, 0.3, 1.0, QPSK).symbol_indices.tolist() == expected

    def test_es_scaling(self, rng):
        h = random_cn(rng, (2, 2))
        np.testing.assert_allclose(mmse_filter(h, 0.5, 2.0), mmse_filter(h, 0.25, 1.0))

    def test_underdetermined_with_noise(self, rng):
        h = random_cn(rng, (1, 2))
        res = detect_mmse([0.3 + 0.1j], h, 0.5, 1.0, QPSK)
        assert res.symbol_indices.shape == (2,)

    @pytest.mark.parametrize("n", [2, 4])
    def test_high_snr_limit(self, rng, n):
        h = random_cn(rng, (n, n))
        wz = zf_filter(h)
        wm = mmse_filter(h, 1e-6, 1.0)
        assert np.linalg.norm(wm - wz) / np.linalg.norm(wz) < 1e-4

    @pytest.mark.parametrize("n", [2, 4])
    def test_low_snr_matched_filter(self, rng, n):
        h = random_cn(rng, (n, n))
        lam = 1e8
        wm = mmse_filter(h, lam, 1.0)
        hh = h.conj().T
        assert np.linalg.norm(wm * lam - hh) / np.linalg.norm(hh) < 1e-4

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            mmse_filter(np.eye(2), -1.0, 1.0)
        with pytest.raises(ValueError):
            mmse_filter(np.eye(2), 1.0, 0.0)


class TestSIC:
    @pytest.mark.parametrize("nulling", ["zf", "mmse"])
    def test_noiseless(self, rng, nulling):
        for _ in range(20):
            y, h, idx = _instance(rng, 3, 3, QPSK, 0.0)
            res = detect_sic(y, h, 0.0, 1.0, QPSK, nulling=nulling)
            np.testing.assert_array_equal(res.symbol_indices, idx)
            assert sorted(res.sic_order.tolist()) == [0, 1, 2]

    def test_single_layer_matches_linear(self, rng):
        for _ in range(30):
            y, h, _ = _instance(rng, 3, 1, QPSK, 0.5)
            np.testing.assert_array_equal(
                detect_sic(y, h, 0.5, 1.0, QPSK, "zf").symbol_indices,
                detect_zf(y, h, QPSK).symbol_indices,
            )
            np.testing.assert_array_equal(
                detect_sic(y, h, 0.5, 1.0, QPSK, "mmse").symbol_indices,
                detect_mmse(y, h, 0.5, 1.0, QPSK).symbol_indices,
            )

    @pytest.mark.parametrize("nulling", ["zf", "mmse"])
    def test_against_reference(self, rng, nulling):
        pts = constellation_points("qpsk")
        for _ in range(100):
            nt = int(rng.integers(2, 4))
            y, h, _ = _instance(rng, nt + 1, nt, QPSK, 0.4)
            lam = None if nulling == "zf" else 0.4
            expected, order = reference_sic(y, h, pts, lam)
            res = detect_sic(y, h, 0.4, 1.0, QPSK, nulling=nulling)
            assert res.symbol_indices.tolist() == expected
            assert res.sic_order.tolist() == order

    def test_first_layer_is_strongest(self):
        # column 1 is much stronger, so its ZF row norm is smallest
        h = np.array([[1.0, 0.0], [0.0, 10.0]])
        res = detect_sic([1.0, 10.0], h, 0.0, 1.0, "bpsk")
        np.testing.assert_array_equal(res.sic_order, [1, 0])

    def test_order_tie_goes_to_lowest_layer(self):
        res = detect_sic([1.0, 1.0, 1.0], np.eye(3), 0.0, 1.0, "bpsk")
        np.testing.assert_array_equal(res.sic_order, [0, 1, 2])

    def test_order_independent_of_y(self, rng):
        h = random_cn(rng, (4, 4))
        for nulling in ("zf", "mmse"):
            orders = {
                tuple(detect_sic(random_cn(rng, 4), h, 0.3, 1.0, QPSK, nulling).sic_order)
                for _ in range(10)
            }
            assert len(orders) == 1

    def test_rank_deficient_zf(self):
        with pytest.raises(RankDeficientError):
            detect_sic([1.0, 1.0], np.ones((2, 2)), 0.1, 1.0, QPSK, "zf")

    def test_bad_nulling(self):
        with pytest.raises(ValueError):
            detect_sic([1.0], np.eye(1), 0.1, 1.0, QPSK, "mrc")


class TestDispatch:
    @pytest.mark.parametrize("kind", KINDS)
    def test_noiseless_exact(self, rng, kind):
        for _ in range(10):
            y, h, idx = _instance(rng, 2, 2, QPSK, 0.0)
            res = detect(kind, y, h, QPSK, noise_var=0.0)
            np.testing.assert_array_equal(res.symbol_indices, idx)
            assert res.bits.shape == (4,)

    def test_parse(self):
        assert DetectorKind.parse("zf-sic") is DetectorKind.ZF_SIC
        assert DetectorKind.parse("MMSE_SIC") is DetectorKind.MMSE_SIC
        with pytest.raises(ValueError):
            DetectorKind.parse("sphere")

    def test_metadata(self, rng):
        y, h, _ = _instance(rng, 2, 2, QPSK, 0.1)
        assert detect("ml", y, h, QPSK).sic_order is None
        assert detect("zf-sic", y, h, QPSK).ml_candidates_evaluated is None
        assert detect("mmse-sic", y, h, QPSK, noise_var=0.1).sic_order.shape == (2,)

    def test_ml_metric_is_minimal(self, rng):
        for _ in range(1000):
            nv = float(rng.uniform(0.05, 1.0))
            y, h, _ = _instance(rng, 2, 2, QPSK, nv)
            ml = _metric(y, h, QPSK, detect("ml", y, h, QPSK).symbol_indices)
            for kind in KINDS[1:]:
                other = detect(kind, y, h, QPSK, noise_var=nv).symbol_indices
                assert ml <= _metric(y, h, QPSK, other) + 1e-12
