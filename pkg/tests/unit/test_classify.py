"""Unit tests for the classify module."""

from functools import lru_cache

import numpy as np
import pytest


def _blob_dataset(n_per_class=60, seed=0, labels=("a", "b")):
    """Well-separated Gaussian blobs on the 60-value force layout."""
    from src.signals import NAMED_MASKS, Dataset, DatasetRow

    rng = np.random.default_rng(seed)
    rows = []
    for k, label in enumerate(labels):
        center = 3.0 * (2 * k - 1)
        for i in range(n_per_class):
            rows.append(
                DatasetRow(f"{label}{i}", "ep", "slicing_action", label, label, (0.0, 0.0), rng.normal(center, 1.0, 60))
            )
    return Dataset.from_rows(rows, mask=NAMED_MASKS["forces"])


def _regression_dataset(seed=0):
    from src.signals import NAMED_MASKS, Dataset, DatasetRow

    rng = np.random.default_rng(seed)
    materials = {"tofu": (0.002, 0.03), "carrot": (0.02, 0.01), "corn": (0.0, 0.0)}
    rows = []
    for k, (name, params) in enumerate(materials.items()):
        for i in range(40):
            rows.append(
                DatasetRow(
                    f"{name}{i}", "ep", "move_down_onto_object", "hitting object", name, params,
                    rng.normal(2.0 * k, 0.3, 60),
                )
            )
    return Dataset.from_rows(rows, mask=NAMED_MASKS["forces"])


def _blob_task():
    from src.classify import Task

    return Task("blobs", "softmax", "sigmoid", "label", lambda meta: np.ones(len(meta), dtype=bool))


def _random_spec(rng, head):
    from src.classify import MlpSpec

    depth = int(rng.integers(1, 4))
    return MlpSpec(
        input_dim=int(rng.integers(2, 6)),
        n_outputs=int(rng.integers(2, 5)),
        hidden=tuple(int(h) for h in rng.integers(2, 6, size=depth)),
        hidden_activation=str(rng.choice(["sigmoid", "relu"])),
        dropout_rate=0.0,
        head=head,
    )


class TestForward:
    """Tests for the forward pass."""

    def test_zero_model_is_uniform(self):
        """Test zero weights give 1/6 for every category."""
        from src.classify import MlpModel, MlpSpec, forward

        model = MlpModel.zeros(MlpSpec(input_dim=8, n_outputs=6))
        probs = forward(model, np.random.default_rng(0).normal(size=(5, 8)))
        np.testing.assert_allclose(probs, 1.0 / 6.0)

    def test_no_dropout_train_equals_infer(self):
        """Test dropout rate 0 makes train and infer identical."""
        from src.classify import MlpModel, MlpSpec, forward

        spec = MlpSpec(input_dim=10, n_outputs=3, hidden=(7, 7, 7), dropout_rate=0.0)
        model = MlpModel.initialize(spec, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(4, 10))
        np.testing.assert_array_equal(forward(model, x), forward(model, x, "train", np.random.default_rng(3)))

    def test_seeded_dropout_is_reproducible(self):
        """Test the same seed gives the same dropout mask and output."""
        from src.classify import MlpModel, MlpSpec, forward

        spec = MlpSpec(input_dim=10, n_outputs=3, hidden=(7, 7, 7), dropout_rate=0.5)
        model = MlpModel.initialize(spec, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(4, 10))
        a = forward(model, x, "train", np.random.default_rng(9))
        b = forward(model, x, "train", np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, forward(model, x))

    def test_softmax_is_distribution(self):
        """Test probabilities are non-negative and sum to one for extreme input."""
        from src.classify import MlpModel, MlpSpec, forward

        model = MlpModel.initialize(MlpSpec(input_dim=4, n_outputs=5, hidden=(6,), hidden_activation="relu"), np.random.default_rng(0))
        probs = forward(model, 1e6 * np.random.default_rng(1).normal(size=(20, 4)))
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        """Test wrong feature widths are rejected."""
        from src.classify import MlpModel, MlpSpec, forward
        from src.signals import DimensionMismatchError

        model = MlpModel.zeros(MlpSpec(input_dim=8, n_outputs=2))
        with pytest.raises(DimensionMismatchError):
            forward(model, np.zeros((1, 9)))


class TestGradients:
    """Tests for loss values and backpropagation."""

    def test_uniform_loss(self):
        """Test uniform predictions cost ln 6 per sample."""
        from src.classify import MlpModel, MlpSpec, loss_and_gradients

        model = MlpModel.zeros(MlpSpec(input_dim=3, n_outputs=6, dropout_rate=0.0))
        loss, _ = loss_and_gradients(model, np.ones((4, 3)), np.array([0, 1, 2, 5]))
        assert loss == pytest.approx(np.log(6.0))

    def test_perfect_regression(self):
        """Test exact regression predictions give zero loss and gradients."""
        from src.classify import MlpModel, MlpSpec, loss_and_gradients

        model = MlpModel.zeros(MlpSpec(input_dim=3, n_outputs=2, head="regression", dropout_rate=0.0))
        loss, grads = loss_and_gradients(model, np.ones((4, 3)), np.zeros((4, 2)))
        assert loss == 0.0
        assert all(np.all(g == 0) for g in grads)

    def test_label_out_of_range(self):
        """Test class indices beyond the head are rejected."""
        from src.classify import MlpModel, MlpSpec, loss_and_gradients

        model = MlpModel.zeros(MlpSpec(input_dim=3, n_outputs=3, dropout_rate=0.0))
        with pytest.raises(ValueError):
            loss_and_gradients(model, np.ones((2, 3)), np.array([0, 3]))

    def test_finite_differences(self):
        """Test backprop against central differences over random architectures."""
        from src.classify import MlpModel, loss_and_gradients

        rng = np.random.default_rng(0)
        eps = 1e-6
        for trial in range(100):
            head = "softmax" if trial % 2 == 0 else "regression"
            spec = _random_spec(rng, head)
            model = MlpModel.initialize(spec, rng)
            model.biases = [rng.normal(scale=0.1, size=b.shape) for b in model.biases]
            x = rng.normal(size=(5, spec.input_dim))
            y = rng.integers(0, spec.n_outputs, size=5) if head == "softmax" else rng.normal(size=(5, spec.n_outputs))

            _, grads = loss_and_gradients(model, x, y)
            params = model.parameters()
            for p_index, param in enumerate(params):
                numeric = np.zeros_like(param)
                for idx in np.ndindex(param.shape):
                    shifted = [p.copy() for p in params]
                    shifted[p_index][idx] += eps
                    up, _ = loss_and_gradients(model.with_parameters(shifted), x, y)
                    shifted[p_index][idx] -= 2 * eps
                    down, _ = loss_and_gradients(model.with_parameters(shifted), x, y)
                    numeric[idx] = (up - down) / (2 * eps)
                scale = np.maximum(np.maximum(np.abs(numeric), np.abs(grads[p_index])), 1e-4)
                assert np.all(np.abs(numeric - grads[p_index]) / scale < 1e-4), (trial, p_index)


class TestAdam:
    """Tests for the optimizer."""

    def test_first_step_is_sign(self):
        """Test the bias-corrected first step moves by lr against the gradient."""
        from src.classify import AdamState, adam_step

        params = [np.array([1.0, -2.0, 0.5])]
        grads = [np.array([3.0, -0.5, 10.0])]
        new, state = adam_step(params, grads, AdamState.for_params(params, lr=0.001))
        np.testing.assert_allclose(new[0] - params[0], -0.001 * np.sign(grads[0]), rtol=1e-6)
        assert state.step == 1

    def test_zero_gradient(self):
        """Test zero gradients leave parameters alone but count the step."""
        from src.classify import AdamState, adam_step

        params = [np.ones((2, 2))]
        new, state = adam_step(params, [np.zeros((2, 2))], AdamState.for_params(params))
        np.testing.assert_array_equal(new[0], params[0])
        assert state.step == 1

    def test_two_steps_by_hand(self):
        """Test two updates against the written-out recursion."""
        from src.classify import AdamState, adam_step

        lr, b1, b2, eps = 0.001, 0.9, 0.999, 1e-8
        state = AdamState.for_params([np.array([1.0])], lr=lr, beta1=b1, beta2=b2, epsilon=eps)
        p, state = adam_step([np.array([1.0])], [np.array([0.5])], state)
        p, state = adam_step(p, [np.array([-0.2])], state)

        m1, v1 = 0.1 * 0.5, 0.001 * 0.25
        p1 = 1.0 - lr * (m1 / 0.1) / (np.sqrt(v1 / 0.001) + eps)
        m2, v2 = 0.9 * m1 + 0.1 * -0.2, 0.999 * v1 + 0.001 * 0.04
        p2 = p1 - lr * (m2 / (1 - 0.9**2)) / (np.sqrt(v2 / (1 - 0.999**2)) + eps)
        assert p[0][0] == pytest.approx(p2, abs=1e-12)

    def test_shape_mismatch(self):
        """Test mismatched gradients are rejected."""
        from src.classify import AdamState, adam_step

        params = [np.ones(3)]
        with pytest.raises(ValueError):
            adam_step(params, [np.ones(4)], AdamState.for_params(params))


class TestMetrics:
    """Tests for evaluation reports."""

    def test_perfect(self):
        """Test perfect predictions give an identity matrix and F1 of 1."""
        from src.classify import classification_report

        truth = ["a", "b", "c", "a"]
        report = classification_report(truth, truth, ("a", "b", "c"))
        np.testing.assert_array_equal(report.normalized_confusion(), np.eye(3))
        assert report.weighted_f1 == 1.0

    def test_hand_computed(self):
        """Test weighted F1 against hand arithmetic."""
        from src.classify import classification_report

        report = classification_report(list("aaabbc"), list("aabbcc"), ("a", "b", "c"))
        np.testing.assert_array_equal(report.confusion, [[2, 1, 0], [0, 1, 1], [0, 0, 1]])
        np.testing.assert_allclose(report.f1, [0.8, 0.5, 2 / 3])
        assert report.weighted_f1 == pytest.approx((3 * 0.8 + 2 * 0.5 + 2 / 3) / 6)
        np.testing.assert_array_equal(report.confusion.sum(axis=1), report.support)

    def test_single_class(self):
        """Test a one-class dataset predicted correctly scores 1."""
        from src.classify import classification_report

        report = classification_report(["a"] * 4, ["a"] * 4, ("a", "b"))
        assert report.weighted_f1 == 1.0

    def test_confusion_csv(self, tmp_path):
        """Test the confusion matrix exports with label headers."""
        import pandas as pd

        from src.classify import classification_report, write_confusion_csv

        report = classification_report(list("aab"), list("abb"), ("a", "b"))
        frame = pd.read_csv(write_confusion_csv(tmp_path / "c.csv", report), index_col=0)
        assert list(frame.columns) == ["a", "b"]
        assert frame.loc["a", "b"] == 1

    def test_regression_report(self):
        """Test per-group absolute errors."""
        from src.classify import regression_report

        report = regression_report(
            np.array([[0.1, 0.2], [0.1, 0.2], [0.0, 0.0]]),
            np.array([[0.2, 0.2], [0.0, 0.2], [0.0, 0.1]]),
            ["x", "x", "y"],
        )
        assert report.labels == ("x", "y")
        np.testing.assert_allclose(report.mae, [[0.1, 0.0], [0.0, 0.1]])
        assert report.to_dict()["kind"] == "regression"


class TestTraining:
    """Tests for the training pipeline."""

    def test_separable_blobs(self):
        """Test separable data reaches a perfect held-out F1 with falling loss."""
        from src.classify import TrainConfig, train

        result = train(_blob_dataset(), _blob_task(), TrainConfig(epochs=30, max_per_class=None), seed=0)
        assert result.report.weighted_f1 == 1.0
        assert result.loss_curve[-1] < result.loss_curve[0]
        assert result.model.labels == ("a", "b")
        assert result.test_index.size == 24

    def test_deterministic(self):
        """Test the same seed reproduces the parameters exactly."""
        from src.classify import TrainConfig, train

        config = TrainConfig(epochs=3)
        a = train(_blob_dataset(), _blob_task(), config, seed=5).model
        b = train(_blob_dataset(), _blob_task(), config, seed=5).model
        for p, q in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(p, q)

    def test_missing_class_rejected(self):
        """Test declared categories without rows are refused."""
        from src.classify import TrainConfig, train

        with pytest.raises(ValueError, match="without training examples"):
            train(_blob_dataset(labels=("in air", "slicing object")), "slicenet", TrainConfig(epochs=1))

    def test_capping(self):
        """Test per-class caps keep at most the cap and preserve order."""
        from src.classify import cap_per_class

        groups = np.array(["a"] * 10 + ["b"] * 3)
        keep = cap_per_class(groups, 4, np.random.default_rng(0))
        assert np.sum(groups[keep] == "a") == 4 and np.sum(groups[keep] == "b") == 3
        assert np.all(np.diff(keep) > 0)

    def test_stratified_split(self):
        """Test every class keeps its share in the held-out part."""
        from src.classify import stratified_split

        groups = np.array(["a"] * 50 + ["b"] * 20)
        train_idx, test_idx = stratified_split(groups, 0.2, seed=1)
        assert np.sum(groups[test_idx] == "a") == 10 and np.sum(groups[test_idx] == "b") == 4
        assert set(train_idx).isdisjoint(test_idx)
        with pytest.raises(ValueError):
            stratified_split(np.array(["a", "a", "b"]), 0.2, seed=1)

    def test_save_load(self, tmp_path):
        """Test a model file restores identical predictions."""
        from src.classify import TrainConfig, load_model, save_model, train

        data = _blob_dataset()
        model = train(data, _blob_task(), TrainConfig(epochs=2), seed=0).model
        restored = load_model(save_model(model, tmp_path / "m.json"))
        np.testing.assert_array_equal(restored.predict(data.features), model.predict(data.features))
        assert restored.metadata["seed"] == 0
        assert restored.feature_mask == model.feature_mask

    def test_regression_and_clamp(self):
        """Test the regression task learns parameters and clamps to bounds."""
        from src.classify import MlpModel, MlpSpec, TrainConfig, evaluate, predict_slice_params, train

        data = _regression_dataset()
        result = train(data, "regress", TrainConfig(epochs=100, max_per_class=None, dropout_rate=0.0), seed=0)
        assert result.model.spec.hidden_activation == "relu"
        assert np.all(result.report.mae < 0.005)
        assert evaluate(result.model, data).labels == ("carrot", "corn", "tofu")

        zero = MlpModel.zeros(MlpSpec(input_dim=60, n_outputs=2, head="regression"))
        np.testing.assert_array_equal(predict_slice_params(zero, np.ones(60)), [0.0, 0.0])

    def test_leave_one_material_out(self):
        """Test the held-out harness reports one row per material."""
        from src.classify import TrainConfig, leave_one_material_out

        frame = leave_one_material_out(_regression_dataset(), TrainConfig(epochs=5), seed=0)
        assert list(frame["material"]) == ["carrot", "corn", "tofu"]
        assert np.all(frame[["mae_x", "mae_z"]].to_numpy() >= 0)


SEPARABILITY_RECIPE = dict(
    board_hits=(3, 3),
    board_scrapes=2,
    object_hits=(6, 6),
    object_scrapes=2,
    slicing_windows=(20, 20),
    in_air_dmp=6,
    scrape_windows=6,
)


@lru_cache(maxsize=None)
def _simulator_split():
    """Training and held-out datasets recorded on every default material with different seeds."""
    from src.simulator import DEFAULT_MATERIALS, CollectionRecipe, generate_dataset

    recipe = CollectionRecipe(**SEPARABILITY_RECIPE)
    return generate_dataset(DEFAULT_MATERIALS, recipe, seed=11), generate_dataset(DEFAULT_MATERIALS, recipe, seed=12)


def _separability_config():
    from src.classify import TrainConfig

    return TrainConfig(epochs=60, learning_rate=0.003, dropout_rate=0.0, hidden=(64, 64), max_per_class=300)


class TestSimulatorSeparability:
    """Tests that networks trained on simulated recordings reach the target scores."""

    def test_event_network(self):
        """Test the six-event network scores a weighted F1 of at least 0.95 on fresh recordings."""
        from src.classify import evaluate, train
        from src.events import EVENTS

        data, held_out = _simulator_split()
        assert set(data.meta["label"]) == set(EVENTS)
        result = train(data, "slicenet", _separability_config(), seed=0)
        assert result.report.weighted_f1 >= 0.95
        assert evaluate(result.model, held_out, "slicenet").weighted_f1 >= 0.95

    def test_subset_networks_match_event_network(self):
        """Test the hitting and slicing networks do at least as well as the six-event network on their events."""
        from src.classify import evaluate, train

        data, held_out = _simulator_split()
        config = _separability_config()
        six_way = train(data, "slicenet", config, seed=0).model
        for task in ("hitting", "slicing"):
            subset = train(data, task, config, seed=0).model
            subset_f1 = evaluate(subset, held_out, task).weighted_f1
            six_way_f1 = evaluate(six_way, held_out, task).weighted_f1
            assert subset_f1 >= 0.95, task
            assert subset_f1 >= six_way_f1 - 0.01, (task, subset_f1, six_way_f1)

    def test_material_network(self):
        """Test the material network tells every default material apart."""
        from src.classify import evaluate, train

        data, held_out = _simulator_split()
        result = train(data, "foodnet", _separability_config(), seed=0)
        assert len(result.model.labels) >= 12
        assert result.report.weighted_f1 >= 0.90
        assert evaluate(result.model, held_out, "foodnet").weighted_f1 >= 0.90

    def test_parameter_regression(self):
        """Test regressed slicing parameters err by at most a tenth of each parameter's range."""
        from src.classify import evaluate, get_task, train
        from src.classify.training import task_rows

        data, held_out = _simulator_split()
        result = train(data, "regress", _separability_config(), seed=0)
        params = task_rows(held_out, get_task("regress")).params
        span = params.max(axis=0) - params.min(axis=0)
        assert np.all(span > 0)
        for report in (result.report, evaluate(result.model, held_out, "regress")):
            mae = (report.mae * report.support[:, None]).sum(axis=0) / report.support.sum()
            assert np.all(mae <= 0.1 * span), (mae, span)
