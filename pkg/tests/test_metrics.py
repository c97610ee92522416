"""Criteria, logistic mapping, full-reference baselines, and the protocol."""

import itertools
import math

import numpy as np
import pytest

from oracles import krcc_oracle, plcc_oracle, psnr_oracle, srcc_oracle, ssim_oracle
from vfiqa.core import Frame, SplitConfig
from vfiqa.errors import InputError, NumericError
from vfiqa.metrics import (
    evaluate_protocol,
    krcc,
    logistic_map,
    plcc,
    psnr,
    rmse,
    srcc,
    ssim,
)


def rand_frame(rng, h=32, w=32):
    return Frame(rng.uniform(0, 1, size=(3, h, w)).astype(np.float32))


class TestCorrelations:
    def test_plcc_matches_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.standard_normal(15)
            y = rng.standard_normal(15)
            np.testing.assert_allclose(
                plcc(x, y), plcc_oracle(x.tolist(), y.tolist()), rtol=1e-12
            )

    def test_srcc_krcc_match_oracles_with_ties(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(3, 20))
            x = rng.integers(0, 6, size=n).astype(float)
            y = rng.integers(0, 6, size=n).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            np.testing.assert_allclose(
                srcc(x, y), srcc_oracle(x.tolist(), y.tolist()), rtol=1e-12, atol=1e-12
            )
            np.testing.assert_allclose(
                krcc(x, y), krcc_oracle(x.tolist(), y.tolist()), rtol=1e-12, atol=1e-12
            )

    def test_exhaustive_small_permutations(self):
        for n in (3, 4, 5):
            x = list(range(n))
            for perm in itertools.permutations(range(n)):
                y = list(perm)
                np.testing.assert_allclose(srcc(x, y), srcc_oracle(x, y), atol=1e-12)
                np.testing.assert_allclose(krcc(x, y), krcc_oracle(x, y), atol=1e-12)

    def test_perfect_and_reversed(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert srcc(x, x) == 1.0
        assert krcc(x, x) == 1.0
        assert srcc(x, x[::-1]) == -1.0
        assert krcc(x, x[::-1]) == -1.0

    def test_srcc_monotone_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(25)
        y = rng.standard_normal(25)
        base = srcc(x, y)
        np.testing.assert_allclose(srcc(np.exp(x), y), base, rtol=1e-12)
        np.testing.assert_allclose(srcc(x**3, y), base, rtol=1e-12)

    def test_constant_input_is_an_error(self):
        with pytest.raises(NumericError):
            srcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(NumericError):
            plcc([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])
        with pytest.raises(NumericError):
            krcc([2.0, 2.0], [1.0, 2.0])

    def test_nonfinite_input_is_an_error(self):
        with pytest.raises(NumericError):
            plcc([1.0, np.nan, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(NumericError):
            srcc([1.0, 2.0, np.inf], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            plcc([1.0, 2.0], [1.0, 2.0, 3.0])


class TestRmse:
    def test_known_value(self):
        assert rmse([0.0, 3.0], [4.0, 3.0]) == pytest.approx(math.sqrt(8.0))

    def test_zero_for_identical(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0


class TestLogisticMap:
    def test_affine_data_maps_almost_perfectly(self):
        rng = np.random.default_rng(3)
        q = rng.uniform(0, 1, 60)
        m = 30.0 * q + 5.0
        fit = logistic_map(q, m)
        assert not fit.fallback
        assert plcc(fit.mapped, m) > 1.0 - 1e-9
        assert rmse(fit.mapped, m) < 1e-3

    def test_mapped_never_worse_than_raw(self):
        rng = np.random.default_rng(4)
        for seed in range(5):
            r = np.random.default_rng(seed)
            q = r.uniform(0, 1, 40)
            m = r.uniform(0, 100, 40)
            fit = logistic_map(q, m)
            assert rmse(fit.mapped, m) <= rmse(q, m) + 1e-12

    def test_identity_scale_falls_back(self):
        # predictions already on the label scale: mapping cannot help
        rng = np.random.default_rng(5)
        m = rng.uniform(0, 100, 50)
        fit = logistic_map(m.copy(), m)
        assert fit.fallback
        np.testing.assert_array_equal(fit.mapped, m)

    def test_decreasing_relation(self):
        rng = np.random.default_rng(6)
        q = rng.uniform(0, 1, 50)
        m = 80.0 - 60.0 * q + 0.5 * rng.standard_normal(50)
        fit = logistic_map(q, m)
        assert not fit.fallback
        assert plcc(fit.mapped, m) > 0.99  # mapping reorients the fit

    def test_constant_predictions_error(self):
        with pytest.raises(NumericError):
            logistic_map([1.0] * 10, list(range(10)))

    def test_minimum_size(self):
        with pytest.raises(InputError):
            logistic_map([1.0, 2.0], [1.0, 2.0])


class TestPsnr:
    def test_uniform_offset_value(self):
        a = Frame(np.full((3, 32, 32), 128 / 255.0, dtype=np.float32))
        b = Frame(np.full((3, 32, 32), 129 / 255.0, dtype=np.float32))
        expected = 10.0 * math.log10(
            1.0 / float(np.mean((a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2))
        )
        assert psnr(a, b) == pytest.approx(expected, abs=1e-12)
        assert psnr(a, b) == pytest.approx(48.1308, abs=1e-3)

    def test_identical_is_infinite(self):
        a = Frame(np.random.default_rng(7).uniform(0, 1, (3, 32, 32)).astype(np.float32))
        assert psnr(a, a) == math.inf

    def test_matches_oracle(self):
        rng = np.random.default_rng(8)
        a = rand_frame(rng)
        b = rand_frame(rng)
        np.testing.assert_allclose(psnr(a, b), psnr_oracle(a.data, b.data), rtol=1e-12)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(9)
        with pytest.raises(InputError):
            psnr(rand_frame(rng, 32, 32), rand_frame(rng, 32, 33))

    def test_strictly_decreasing_with_noise(self):
        rng = np.random.default_rng(14)
        clean = rand_frame(rng)
        noise = rng.uniform(-1, 1, clean.data.shape)
        scores = []
        for amp in (0.01, 0.02, 0.05, 0.1, 0.2):
            noisy = Frame(np.clip(clean.data + amp * noise, 0, 1).astype(np.float32))
            scores.append(psnr(clean, noisy))
        assert all(a > b for a, b in zip(scores, scores[1:]))


class TestSsim:
    def test_identical_is_exactly_one(self):
        rng = np.random.default_rng(10)
        a = rand_frame(rng)
        assert ssim(a, a) == 1.0

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(11)
        a = rand_frame(rng)
        b = Frame(
            np.clip(a.data + rng.uniform(-0.1, 0.1, a.data.shape), 0, 1).astype(
                np.float32
            )
        )
        np.testing.assert_allclose(
            ssim(a, b), ssim_oracle(a.data.tolist(), b.data.tolist()), atol=1e-9
        )

    def test_degradation_ordering(self):
        rng = np.random.default_rng(12)
        a = rand_frame(rng, 48, 48)
        mild = Frame(np.clip(a.data + 0.02 * rng.standard_normal(a.data.shape), 0, 1).astype(np.float32))
        harsh = Frame(np.clip(a.data + 0.2 * rng.standard_normal(a.data.shape), 0, 1).astype(np.float32))
        assert ssim(a, mild) > ssim(a, harsh)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(13)
        with pytest.raises(InputError):
            ssim(rand_frame(rng, 32, 32), rand_frame(rng, 64, 64))


class TestEvaluateProtocol:
    def test_report_structure_and_determinism(self, synthetic_dataset, reference_weights):
        from vfiqa.core import load_manifest
        from vfiqa.trainer import TrainConfig

        manifest = load_manifest(synthetic_dataset["manifest"])
        split = SplitConfig(repeats=3)
        cfg = TrainConfig()
        a = evaluate_protocol(manifest, None, reference_weights, split, cfg)
        b = evaluate_protocol(manifest, None, reference_weights, split, cfg)
        assert a.method == "coherence"
        assert a.backbone == "reference"
        assert len(a.repeats) == 3
        assert set(a.averages) == {"srcc", "krcc", "plcc", "rmse", "plcc_raw", "rmse_raw"}
        for ra, rb in zip(a.repeats, b.repeats):
            assert ra.srcc == rb.srcc
            assert ra.rmse == rb.rmse
        for rep in a.repeats:
            assert rep.n_train == 24 and rep.n_test == 6
            assert -1.0 <= rep.srcc <= 1.0

    def test_manifest_order_invariance(self, synthetic_dataset, reference_weights):
        from vfiqa.core import DatasetManifest, load_manifest
        from vfiqa.trainer import TrainConfig

        manifest = load_manifest(synthetic_dataset["manifest"])
        shuffled = DatasetManifest(records=tuple(reversed(manifest.records)))
        split = SplitConfig(repeats=2)
        a = evaluate_protocol(manifest, None, reference_weights, split, TrainConfig())
        b = evaluate_protocol(shuffled, None, reference_weights, split, TrainConfig())
        for ra, rb in zip(a.repeats, b.repeats):
            assert ra.srcc == rb.srcc
            assert ra.plcc == rb.plcc

    def test_averages_are_means(self, synthetic_dataset, reference_weights):
        from vfiqa.core import load_manifest
        from vfiqa.trainer import TrainConfig

        manifest = load_manifest(synthetic_dataset["manifest"])
        report = evaluate_protocol(
            manifest, None, reference_weights, SplitConfig(repeats=3), TrainConfig()
        )
        for field in ("srcc", "rmse"):
            vals = [getattr(r, field) for r in report.repeats]
            assert report.averages[field] == pytest.approx(float(np.mean(vals)), rel=1e-15)

    def test_requires_labels(self, reference_weights):
        from vfiqa.core import DatasetManifest, TripletRecord
        from vfiqa.errors import ManifestError
        from vfiqa.trainer import TrainConfig

        manifest = DatasetManifest(
            records=(
                TripletRecord(id="x", path_i0="a.png", path_it="b.png", path_i1="c.png"),
            )
        )
        with pytest.raises(ManifestError):
            evaluate_protocol(
                manifest, None, reference_weights, SplitConfig(), TrainConfig()
            )
