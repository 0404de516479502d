"""Edge-weight learning: pair extraction, training, gradient check, export."""

import numpy as np
import pytest

from gridseg import (
    FEATURE_NAMES,
    DivergenceError,
    FormatError,
    InvalidParameterError,
    RasterImage,
    WeightModel,
    apply_model,
    extract_pairs,
    grad_check,
    load_model,
    save_model,
    train,
)


def two_level_image(size=6, level_a=0.2, level_b=0.9, seed=None, noise=0.0):
    """Left half level_a, right half level_b, optional seeded noise."""
    img = np.full((size, size), level_a)
    img[:, size // 2:] = level_b
    if noise:
        rng = np.random.default_rng(seed)
        img = img + rng.normal(scale=noise, size=img.shape)
    mask = np.zeros((size, size), dtype=int)
    mask[:, size // 2:] = 1
    return RasterImage.from_array(img), mask


class TestExtractPairs:
    def test_2x2_split(self):
        img = RasterImage.from_array(np.array([[0.0, 1.0], [0.0, 1.0]]))
        mask = np.array([[0, 1], [0, 1]])
        x, y = extract_pairs(img, mask)
        # Canonical order: two horizontal pairs, then two vertical pairs.
        assert x.shape == (4, len(FEATURE_NAMES))
        np.testing.assert_array_equal(y, [-1, -1, 1, 1])
        np.testing.assert_allclose(x[:, 0], [-1.0, -1.0, 0.0, 0.0])
        np.testing.assert_allclose(x[:, 1], [1.0, 1.0, 0.0, 0.0])

    def test_signed_diff_orientation(self):
        img = RasterImage.from_array(np.array([[0.8, 0.3]]))
        x, _ = extract_pairs(img, np.array([[0, 0]]))
        assert x[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_local_var_nonnegative(self):
        rng = np.random.default_rng(15)
        img = RasterImage.from_array(rng.random((7, 7)))
        x, _ = extract_pairs(img, np.zeros((7, 7), dtype=int))
        var_col = list(FEATURE_NAMES).index("local_var_mean")
        assert np.all(x[:, var_col] >= 0)

    def test_constant_image_features_vanish(self):
        img = RasterImage.from_array(np.full((4, 4), 0.3))
        x, y = extract_pairs(img, np.zeros((4, 4), dtype=int))
        np.testing.assert_allclose(x, 0.0, atol=1e-15)
        assert np.all(y == 1)

    def test_nonbinary_mask_rejected(self):
        img = RasterImage.from_array(np.zeros((2, 2)))
        with pytest.raises(InvalidParameterError):
            extract_pairs(img, np.array([[0, 2], [0, 1]]))


class TestTrain:
    def test_zero_epochs_returns_zero_model(self):
        img, mask = two_level_image()
        model = train([(img, mask)], epochs=0)
        np.testing.assert_array_equal(model.theta, np.zeros(len(FEATURE_NAMES)))
        assert model.bias == 0.0
        assert len(model.metadata["loss_curve"]) == 1
        assert model.metadata["loss_curve"][0] == pytest.approx(np.log(2.0), abs=1e-12)

    def test_separable_dataset_high_pair_accuracy(self):
        data = [two_level_image(seed=s, noise=0.02) for s in range(3)]
        model = train(data, epochs=400, learning_rate=1.0)
        assert model.metadata["pair_accuracy"] >= 0.99
        assert model.metadata["loss_curve"][-1] < model.metadata["loss_curve"][0]

    def test_loss_curve_monotone_for_modest_rate(self):
        data = [two_level_image(seed=1, noise=0.05)]
        model = train(data, epochs=50, learning_rate=0.2)
        curve = np.asarray(model.metadata["loss_curve"])
        assert curve.shape == (51,)
        assert np.all(np.diff(curve) <= 1e-12)

    def test_duplicating_an_image_changes_nothing(self):
        # Per-image mean then across-image mean: copies carry no new signal.
        img, mask = two_level_image(seed=2, noise=0.03)
        a = train([(img, mask)], epochs=60, learning_rate=0.5)
        b = train([(img, mask), (img, mask)], epochs=60, learning_rate=0.5)
        np.testing.assert_allclose(a.theta, b.theta, atol=1e-12)
        assert a.bias == pytest.approx(b.bias, abs=1e-12)

    def test_divergence_names_epoch(self):
        img, mask = two_level_image()
        with pytest.raises(DivergenceError) as err:
            train([(img, mask)], epochs=20, learning_rate=1e308)
        assert "epoch" in str(err.value)

    def test_empty_dataset_rejected(self):
        with pytest.raises(InvalidParameterError):
            train([])

    def test_bad_hyperparameters_rejected(self):
        img, mask = two_level_image()
        with pytest.raises(InvalidParameterError):
            train([(img, mask)], learning_rate=0.0)
        with pytest.raises(InvalidParameterError):
            train([(img, mask)], epochs=-1)


class TestApplyModel:
    def test_zero_model_gives_zero_weights(self):
        img, _ = two_level_image()
        model = WeightModel(theta=np.zeros(len(FEATURE_NAMES)), bias=0.0)
        g = apply_model(model, img)
        np.testing.assert_array_equal(g.edge_weight_array(), 0.0)

    def test_weights_strictly_inside_unit_interval(self):
        img, _ = two_level_image()
        model = WeightModel(theta=np.full(len(FEATURE_NAMES), 10.0), bias=10.0)
        w = apply_model(model, img).edge_weight_array()
        assert np.all(w > -1.0) and np.all(w < 1.0)

    def test_trained_model_separates_boundary(self):
        img, mask = two_level_image(seed=4, noise=0.02)
        model = train([(img, mask)], epochs=300, learning_rate=1.0)
        g = apply_model(model, img)
        x, y = extract_pairs(img, mask)
        w = g.edge_weight_array()
        assert w[y == -1].mean() < 0 < w[y == 1].mean()

    def test_bias_only_model_is_tanh_half(self):
        img, _ = two_level_image()
        model = WeightModel(theta=np.zeros(len(FEATURE_NAMES)), bias=1.0)
        w = apply_model(model, img).edge_weight_array()
        np.testing.assert_allclose(w, np.tanh(0.5), atol=1e-12)


class TestGradCheck:
    def test_deviation_below_tolerance(self):
        data = [two_level_image(seed=s, noise=0.05) for s in range(2)]
        assert grad_check(data, epsilon=1e-6, seed=0) < 1e-5

    def test_epsilon_validation(self):
        img, mask = two_level_image()
        with pytest.raises(InvalidParameterError):
            grad_check([(img, mask)], epsilon=0.0)
        with pytest.raises(InvalidParameterError):
            grad_check([(img, mask)], epsilon=0.1)


class TestModelSerialization:
    def test_round_trip(self, tmp_path):
        img, mask = two_level_image(seed=6, noise=0.02)
        model = train([(img, mask)], epochs=40)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        np.testing.assert_array_equal(back.theta, model.theta)
        assert back.bias == model.bias
        assert back.feature_spec == model.feature_spec
        assert back.metadata["loss_curve"] == list(model.metadata["loss_curve"])

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": 99, "theta": [], "bias": 0.0, "feature_spec": []}')
        with pytest.raises(FormatError):
            load_model(path)

    def test_unknown_feature_rejected(self):
        with pytest.raises(InvalidParameterError):
            WeightModel(theta=np.zeros(1), bias=0.0, feature_spec=("volume",))
