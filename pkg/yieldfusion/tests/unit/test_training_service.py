"""
Unit tests for training, Adam, clipping and the hyper-parameter search
"""

import numpy as np
import pytest
from models.config import ModelConfig, TrainConfig
from models.reaction import BUCHWALD_HARTWIG
from services.feature_service import FeatureBuilder, reaction_tokens
from services.fusion_model import init_model
from services.model_exceptions import (
    EmptyDatasetError,
    EmptyGridError,
    InvalidConfigError,
)
from services.training_service import (
    AdamState,
    clip_global_norm,
    expand_grid,
    hyperparameter_search,
    mean_squared_error,
    train,
)
from utils.tensor import Parameter

pytestmark = pytest.mark.unit


@pytest.fixture(scope="module")
def features(bh_synthetic):
    records = list(bh_synthetic.dataset.records[:48])
    longest = max(len(reaction_tokens(record)) for record in records)
    builder = FeatureBuilder.fit(
        records, BUCHWALD_HARTWIG, max_len=longest + 1
    )
    return builder, builder.transform(records)


def model_config(builder: FeatureBuilder, **overrides) -> ModelConfig:
    values = {
        "d_model": 8,
        "n_heads": 2,
        "n_layers": 1,
        "ff_dim": 16,
        "max_len": builder.max_len,
        "vocab_size": builder.vocab_size,
        "mlp_hidden": [8],
        "descriptor_dim": builder.descriptor_dim,
        "dropout_rate": 0.1,
        **overrides,
    }
    return ModelConfig(**values)


def train_config(**overrides) -> TrainConfig:
    values = {
        "lr": 3e-3,
        "batch_size": 16,
        "epochs": 3,
        "seed": 1,
        "dropout_rate": 0.1,
        **overrides,
    }
    return TrainConfig(**values)


class TestTrain:
    """Test cases for train"""

    def test_zero_learning_rate(self, features):
        """Test lr = 0 leaves every parameter unchanged"""
        builder, batch = features
        model = init_model(model_config(builder), seed=0)
        result = train(model, batch, None, train_config(lr=0.0))
        before, after = model.state(), result.model.state()
        for name in before:
            assert np.array_equal(before[name], after[name])
        assert result.steps == 9

    def test_input_model_untouched(self, features):
        """Test training works on a copy"""
        builder, batch = features
        model = init_model(model_config(builder), seed=0)
        snapshot = model.state()
        result = train(model, batch, None, train_config(epochs=1))
        assert np.array_equal(
            snapshot["head.weight"], model["head.weight"].data
        )
        assert not np.array_equal(
            snapshot["head.weight"], result.model["head.weight"].data
        )

    def test_deterministic(self, features):
        """Test identical seed, data and config give identical histories"""
        builder, batch = features
        train_set = batch.subset(range(40))
        val_set = batch.subset(range(40, 48))
        runs = [
            train(
                init_model(model_config(builder), seed=2),
                train_set,
                val_set,
                train_config(),
            )
            for _ in range(2)
        ]
        assert runs[0].train_losses == runs[1].train_losses
        assert runs[0].val_losses == runs[1].val_losses

    def test_best_epoch_is_first_minimum(self, features):
        """Test returned parameters come from the lowest validation MSE"""
        builder, batch = features
        train_set = batch.subset(range(40))
        val_set = batch.subset(range(40, 48))
        result = train(
            init_model(model_config(builder), seed=3),
            train_set,
            val_set,
            train_config(epochs=4, lr=1e-2),
        )
        val_losses = result.val_losses
        assert result.best_epoch == int(np.argmin(val_losses)) + 1
        assert mean_squared_error(result.model, val_set) == pytest.approx(
            min(val_losses)
        )

    def test_history_without_validation(self, features):
        """Test val MSE is None when no validation set is given"""
        builder, batch = features
        result = train(
            init_model(model_config(builder), seed=0),
            batch,
            None,
            train_config(epochs=2),
        )
        assert result.val_losses == [None, None]
        assert [r.epoch for r in result.history] == [1, 2]
        assert result.history_dict()["epochs"][1]["steps"] == 6

    def test_max_steps(self, features):
        """Test training stops after max_steps optimizer steps"""
        builder, batch = features
        result = train(
            init_model(model_config(builder), seed=0),
            batch,
            None,
            train_config(epochs=10, max_steps=4),
        )
        assert result.steps == 4
        assert len(result.history) == 2

    def test_empty_training_set(self, features):
        """Test training without records"""
        builder, batch = features
        with pytest.raises(EmptyDatasetError):
            train(
                init_model(model_config(builder), seed=0),
                batch.subset([]),
                None,
                train_config(),
            )

    @pytest.mark.slow
    def test_memorizes_small_subset(self, bh_synthetic):
        """Test a 64-sample subset is fitted to train RMSE < 0.03"""
        records = list(bh_synthetic.dataset.records[:64])
        builder = FeatureBuilder.fit(records, BUCHWALD_HARTWIG)
        batch = builder.transform(records)
        config = model_config(
            builder,
            modality="descriptors",
            mlp_hidden=[64, 64],
            dropout_rate=0.0,
        )
        result = train(
            init_model(config, seed=0),
            batch,
            None,
            train_config(
                lr=3e-3, batch_size=64, epochs=2000, dropout_rate=0.0
            ),
        )
        assert result.steps == 2000
        rmse = np.sqrt(mean_squared_error(result.model, batch))
        assert rmse < 0.03


class TestAdam:
    """Test cases for AdamState and clipping"""

    def test_first_step_moves_by_lr(self):
        """Test the bias-corrected first step has magnitude ~lr"""
        model = init_model(
            ModelConfig(
                vocab_size=3,
                descriptor_dim=2,
                max_len=2,
                modality="descriptors",
                mlp_hidden=[2],
            ),
            seed=0,
        )
        before = model["head.bias"].data.copy()
        optimizer = AdamState.for_model(model, lr=0.01)
        gradients = {
            name: np.full_like(p.data, 0.5)
            for name, p in model.parameters.items()
        }
        optimizer.update(model, gradients)
        assert optimizer.step == 1
        moved = (model["head.bias"].data - before).tolist()
        assert moved == pytest.approx([-0.01])

    def test_clip_scales_down(self):
        """Test gradients above the max norm are rescaled"""
        gradients = {"a": np.array([3.0, 4.0])}
        norm = clip_global_norm(gradients, 1.0)
        assert norm == 5.0
        assert gradients["a"].tolist() == pytest.approx([0.6, 0.8])

    def test_clip_leaves_small_gradients(self):
        """Test gradients within the max norm are untouched"""
        gradients = {"a": np.array([0.3]), "b": np.array([[0.4]])}
        assert clip_global_norm(gradients, 1.0) == pytest.approx(0.5)
        assert gradients["a"].tolist() == [0.3]

    def test_clip_is_global(self):
        """Test the norm spans every parameter"""
        gradients = {"a": np.array([3.0]), "b": np.array([4.0])}
        clip_global_norm(gradients, 2.5)
        assert gradients["a"][0] == pytest.approx(1.5)
        assert gradients["b"][0] == pytest.approx(2.0)

    def test_parameter_names_match(self):
        """Test moments are keyed like the model parameters"""
        model = init_model(
            ModelConfig(vocab_size=3, descriptor_dim=2, max_len=2), seed=0
        )
        optimizer = AdamState.for_model(model, lr=0.1)
        assert optimizer.first_moment.keys() == model.parameters.keys()
        assert isinstance(model["head.weight"], Parameter)


class TestExpandGrid:
    """Test cases for expand_grid"""

    def test_empty_grid(self):
        """Test an empty grid is one candidate without overrides"""
        assert expand_grid("") == [{}]

    def test_cartesian_product(self):
        """Test the first key varies slowest"""
        assert expand_grid("lr=1e-3,3e-4;d_model=32,64") == [
            {"lr": "1e-3", "d_model": "32"},
            {"lr": "1e-3", "d_model": "64"},
            {"lr": "3e-4", "d_model": "32"},
            {"lr": "3e-4", "d_model": "64"},
        ]

    def test_list_values(self):
        """Test '/' separates items of list-valued keys"""
        assert expand_grid("mlp_hidden=128/64,64") == [
            {"mlp_hidden": "128,64"},
            {"mlp_hidden": "64"},
        ]

    def test_dashed_keys(self):
        """Test CLI-style keys are normalized"""
        assert expand_grid("batch-size=8") == [{"batch_size": "8"}]

    @pytest.mark.parametrize(
        "grid", ["unknown=1", "lr", "batch_size=abc", "lr=1;lr=2"]
    )
    def test_invalid(self, grid):
        """Test malformed grids"""
        with pytest.raises(InvalidConfigError):
            expand_grid(grid)

    def test_key_without_values(self):
        """Test a key with an empty value list"""
        with pytest.raises(EmptyGridError):
            expand_grid("lr=")


class TestHyperparameterSearch:
    """Test cases for hyperparameter_search"""

    @pytest.fixture
    def split(self, features):
        builder, batch = features
        return builder, batch.subset(range(36)), batch.subset(range(36, 48))

    def test_empty_grid(self, split):
        """Test a search without candidates"""
        _, train_set, holdout = split
        with pytest.raises(EmptyGridError):
            hyperparameter_search([], train_set, holdout)

    def test_singleton(self, split):
        """Test a grid of one returns that candidate"""
        builder, train_set, holdout = split
        candidate = (train_config(epochs=1), model_config(builder))
        result = hyperparameter_search([candidate], train_set, holdout)
        assert result.best_index == 0
        assert result.train_config == candidate[0]
        assert len(result.scores) == 1

    def test_duplicates_first_wins(self, split):
        """Test identical candidates tie and the first index wins"""
        builder, train_set, holdout = split
        candidate = (train_config(epochs=1), model_config(builder))
        result = hyperparameter_search(
            [candidate, candidate], train_set, holdout
        )
        assert result.scores[0].holdout_rmse == result.scores[1].holdout_rmse
        assert result.best_index == 0

    def test_best_is_argmin(self, split):
        """Test the chosen candidate has the lowest hold-out RMSE"""
        builder, train_set, holdout = split
        grid = [
            (train_config(epochs=1, lr=lr), model_config(builder))
            for lr in (0.0, 1e-2, 3e-3)
        ]
        result = hyperparameter_search(grid, train_set, holdout)
        best = result.scores[result.best_index].holdout_rmse
        assert all(best <= score.holdout_rmse for score in result.scores)
        assert result.train_config == grid[result.best_index][0]
