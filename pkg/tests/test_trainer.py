"""Weight fitting: schedule, optimizer behavior, and the closed-form oracle."""

import numpy as np
import pytest

from oracles import least_squares_oracle
from vfiqa.coherence import ModelWeights
from vfiqa.errors import InputError, ManifestError, NumericError
from vfiqa.trainer import (
    SimilarityTable,
    TrainConfig,
    learning_rate,
    least_squares_fit,
    mse_loss,
    precompute_similarities,
    read_similarity_table,
    train,
    write_similarity_table,
)


def rank_one_table(n=20, seed=0, noise=0.5):
    """Features on a one-dimensional latent: every MSE direction the
    optimizer must travel is strongly determined, so the schedule's total
    reach is not the binding constraint."""
    rng = np.random.default_rng(seed)
    latent = rng.uniform(0, 30, size=(n, 1))
    mixing = rng.uniform(0.5, 1.5, size=(1, 12))
    x = latent @ mixing
    theta_true = 1.0 / 12.0 + rng.uniform(-0.002, 0.002, size=12)
    y = x @ theta_true + noise * rng.standard_normal(n)
    return SimilarityTable(
        ids=tuple(f"r{i}" for i in range(n)), features=x, mos=y
    )


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.initial_lr == 1e-4
        assert cfg.lr_halving_interval == 50
        assert cfg.max_iterations == 500
        assert (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps) == (0.9, 0.999, 1e-8)
        assert cfg.init_alpha == cfg.init_beta == 1.0 / 12.0

    def test_validation(self):
        with pytest.raises(InputError):
            TrainConfig(initial_lr=0.0)
        with pytest.raises(InputError):
            TrainConfig(lr_halving_interval=0)
        with pytest.raises(InputError):
            TrainConfig(adam_beta1=1.0)


class TestLearningRate:
    def test_halving_schedule(self):
        cfg = TrainConfig()
        assert learning_rate(cfg, 0) == 1e-4
        assert learning_rate(cfg, 49) == 1e-4
        assert learning_rate(cfg, 50) == 5e-5
        assert learning_rate(cfg, 99) == 5e-5
        assert learning_rate(cfg, 100) == 2.5e-5
        assert learning_rate(cfg, 499) == 1e-4 * 2.0**-9


class TestSimilarityTable:
    def test_shape_validation(self):
        with pytest.raises(InputError):
            SimilarityTable(ids=("a",), features=np.zeros((1, 11)), mos=np.zeros(1))
        with pytest.raises(InputError):
            SimilarityTable(ids=("a",), features=np.zeros((1, 12)), mos=np.zeros(2))
        with pytest.raises(InputError):
            SimilarityTable(
                ids=("a",), features=np.zeros((1, 12)), mos=np.array([np.nan])
            )

    def test_select_order_and_content(self):
        table = rank_one_table(n=5)
        sub = table.select(("r3", "r1"))
        assert sub.ids == ("r3", "r1")
        np.testing.assert_array_equal(sub.features[0], table.features[3])
        np.testing.assert_array_equal(sub.mos[1], table.mos[1])

    def test_select_unknown_id(self):
        table = rank_one_table(n=3)
        with pytest.raises(InputError, match="r9"):
            table.select(("r0", "r9"))

    def test_round_trip_exact(self, tmp_path):
        table = rank_one_table(n=7, seed=4)
        path = tmp_path / "table.csv"
        write_similarity_table(table, path)
        loaded = read_similarity_table(path)
        assert loaded.ids == table.ids
        np.testing.assert_array_equal(loaded.features, table.features)
        np.testing.assert_array_equal(loaded.mos, table.mos)

    def test_read_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,mos\nx,1\n")
        with pytest.raises(InputError, match="header"):
            read_similarity_table(path)


class TestPrecompute:
    def test_manifest_order_and_labels(self, synthetic_dataset, reference_weights):
        from vfiqa.core import load_manifest

        manifest = load_manifest(synthetic_dataset["manifest"])
        table = precompute_similarities(manifest, reference_weights)
        assert table.ids == tuple(r.id for r in manifest.records)
        np.testing.assert_array_equal(
            table.mos, [r.mos for r in manifest.records]
        )
        assert table.backbone == "reference"
        assert np.all(np.isfinite(table.features))

    def test_requires_mos(self, tmp_path, reference_weights):
        from vfiqa.core import DatasetManifest, TripletRecord

        manifest = DatasetManifest(
            records=(
                TripletRecord(id="x", path_i0="a.png", path_it="b.png", path_i1="c.png"),
            )
        )
        with pytest.raises(ManifestError, match="mos"):
            precompute_similarities(manifest, reference_weights)

    def test_missing_frame_names_record(self, tmp_path, reference_weights):
        from vfiqa.core import DatasetManifest, TripletRecord

        manifest = DatasetManifest(
            records=(
                TripletRecord(
                    id="ghost",
                    path_i0=str(tmp_path / "a.png"),
                    path_it=str(tmp_path / "b.png"),
                    path_i1=str(tmp_path / "c.png"),
                    mos=10.0,
                ),
            )
        )
        with pytest.raises(InputError, match="ghost"):
            precompute_similarities(manifest, reference_weights)

    def test_dimension_mismatch_names_record(self, tmp_path, reference_weights):
        from imagefiles import write_png
        from vfiqa.core import DatasetManifest, TripletRecord

        rng = np.random.default_rng(0)
        small = rng.uniform(0, 1, (3, 32, 32)).astype(np.float32)
        large = rng.uniform(0, 1, (3, 64, 64)).astype(np.float32)
        write_png(tmp_path / "a.png", small)
        write_png(tmp_path / "b.png", large)
        write_png(tmp_path / "c.png", small)
        manifest = DatasetManifest(
            records=(
                TripletRecord(
                    id="odd",
                    path_i0=str(tmp_path / "a.png"),
                    path_it=str(tmp_path / "b.png"),
                    path_i1=str(tmp_path / "c.png"),
                    mos=10.0,
                ),
            )
        )
        with pytest.raises(InputError, match="odd"):
            precompute_similarities(manifest, reference_weights)


class TestMseLoss:
    def test_known_value(self):
        assert mse_loss([1.0, 2.0], [0.0, 4.0]) == 2.5

    def test_validation(self):
        with pytest.raises(InputError):
            mse_loss([1.0], [1.0, 2.0])
        with pytest.raises(InputError):
            mse_loss([], [])


class TestTrain:
    def test_reaches_closed_form_loss(self):
        table = rank_one_table(n=20, seed=1)
        fitted = train(table, TrainConfig())
        oracle = least_squares_fit(table)
        loss_fit = mse_loss(table.features @ np.concatenate([fitted.alpha, fitted.beta]), table.mos)
        loss_ls = mse_loss(table.features @ np.concatenate([oracle.alpha, oracle.beta]), table.mos)
        assert loss_fit <= 1.05 * loss_ls + 1e-12

    def test_deterministic(self):
        table = rank_one_table(n=10, seed=2)
        a = train(table, TrainConfig())
        b = train(table, TrainConfig())
        assert a.alpha.tobytes() == b.alpha.tobytes()
        assert a.beta.tobytes() == b.beta.tobytes()

    def test_callback_sequence(self):
        table = rank_one_table(n=8, seed=3)
        cfg = TrainConfig(max_iterations=120)
        seen = []
        train(table, cfg, on_iteration=lambda k, lr, loss: seen.append((k, lr, loss)))
        assert len(seen) == 120
        assert [k for k, _, _ in seen] == list(range(120))
        assert seen[0][1] == 1e-4 and seen[60][1] == 5e-5
        init = np.full(12, 1.0 / 12.0)
        assert seen[0][2] == mse_loss(table.features @ init, table.mos)

    def test_zero_iterations_returns_init(self):
        table = rank_one_table(n=5, seed=4)
        fitted = train(table, TrainConfig(max_iterations=0))
        np.testing.assert_array_equal(fitted.alpha, np.full(6, 1.0 / 12.0))
        np.testing.assert_array_equal(fitted.beta, np.full(6, 1.0 / 12.0))

    def test_init_override(self):
        table = rank_one_table(n=5, seed=5)
        start = ModelWeights(alpha=np.arange(6.0), beta=-np.arange(6.0))
        fitted = train(table, TrainConfig(max_iterations=0), init=start)
        np.testing.assert_array_equal(fitted.alpha, start.alpha)
        np.testing.assert_array_equal(fitted.beta, start.beta)

    def test_nonfinite_loss_raises(self):
        x = np.full((4, 12), 1e200)
        table = SimilarityTable(
            ids=("a", "b", "c", "d"), features=x, mos=np.zeros(4)
        )
        with pytest.raises(NumericError):
            train(table, TrainConfig())

    def test_empty_table_rejected(self):
        with pytest.raises(InputError):
            train(
                SimilarityTable(ids=(), features=np.zeros((0, 12)), mos=np.zeros(0)),
                TrainConfig(),
            )


class TestLeastSquares:
    def test_matches_elimination_oracle(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((40, 12))
        y = rng.standard_normal(40)
        table = SimilarityTable(
            ids=tuple(f"r{i}" for i in range(40)), features=x, mos=y
        )
        fitted = least_squares_fit(table)
        expected = least_squares_oracle(x.tolist(), y.tolist())
        got = np.concatenate([fitted.alpha, fitted.beta])
        np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-10)

    def test_handles_rank_deficiency(self):
        # duplicated column: the damped system still solves cleanly
        rng = np.random.default_rng(7)
        base = rng.standard_normal((30, 6))
        x = np.hstack([base, base])
        y = rng.standard_normal(30)
        table = SimilarityTable(
            ids=tuple(f"r{i}" for i in range(30)), features=x, mos=y
        )
        fitted = least_squares_fit(table)
        assert np.all(np.isfinite(fitted.alpha)) and np.all(np.isfinite(fitted.beta))
