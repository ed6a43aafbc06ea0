"""
Training Service
Adam training with global-norm clipping and best-epoch selection, plus the
hold-out hyper-parameter search.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from models.config import ModelConfig, TrainConfig
from utils.log_context import RunContextAdapter, get_run_logger
from utils.tensor import (
    Gradients,
    NonFiniteError,
    Tape,
    backward,
    mse_loss,
)

from .feature_service import FeatureBatch
from .fusion_model import (
    FusionModel,
    clamp_yield,
    forward,
    init_model,
    predict_batch,
)
from .metrics_service import rmse
from .model_exceptions import (
    EmptyDatasetError,
    EmptyGridError,
    InvalidConfigError,
    TrainingDivergedError,
)

logger = get_run_logger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Grid keys and the type their values parse to
GRID_KEYS: dict[str, type] = {
    "lr": float,
    "batch_size": int,
    "epochs": int,
    "grad_clip": float,
    "dropout_rate": float,
    "max_steps": int,
    "d_model": int,
    "n_heads": int,
    "n_layers": int,
    "ff_dim": int,
    "mlp_hidden": str,
    "modality": str,
}


@dataclass
class AdamState:
    lr: float
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_model(cls, model: FusionModel, lr: float) -> "AdamState":
        return cls(
            lr=lr,
            first_moment={
                name: np.zeros_like(p.data)
                for name, p in model.parameters.items()
            },
            second_moment={
                name: np.zeros_like(p.data)
                for name, p in model.parameters.items()
            },
        )

    def update(self, model: FusionModel, gradients: Gradients) -> None:
        """One in-place Adam step on every parameter"""
        self.step += 1
        correction1 = 1.0 - self.beta1**self.step
        correction2 = 1.0 - self.beta2**self.step
        for name, parameter in model.parameters.items():
            grad = gradients[name]
            m = self.first_moment[name]
            v = self.second_moment[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            parameter.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float | None
    steps: int


@dataclass
class TrainResult:
    model: FusionModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0

    @property
    def train_losses(self) -> list[float]:
        return [record.train_mse for record in self.history]

    @property
    def val_losses(self) -> list[float | None]:
        return [record.val_mse for record in self.history]

    def history_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "steps": self.steps,
            "epochs": [
                {
                    "epoch": record.epoch,
                    "train_mse": record.train_mse,
                    "val_mse": record.val_mse,
                    "steps": record.steps,
                }
                for record in self.history
            ],
        }


def clip_global_norm(gradients: Gradients, max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is <= max_norm"""
    total = float(
        np.sqrt(sum(float(np.sum(g * g)) for g in gradients.values()))
    )
    if total > max_norm:
        scale = max_norm / total
        for grad in gradients.values():
            grad *= scale
    return total


def mean_squared_error(model: FusionModel, batch: FeatureBatch) -> float:
    """Inference-mode MSE of raw predictions"""
    predictions = predict_batch(
        model, batch.ids, batch.attention_mask, batch.descriptors
    )
    return float(np.mean((predictions - batch.targets) ** 2))


def train(
    model: FusionModel,
    train_set: FeatureBatch,
    val_set: FeatureBatch | None,
    tc: TrainConfig,
    log: RunContextAdapter | None = None,
) -> TrainResult:
    """
    Fit a copy of ``model`` by minibatch Adam on MSE

    Returns the parameters of the epoch with the lowest validation MSE
    (training MSE when there is no validation set); the first such epoch
    wins ties.

    Raises:
        EmptyDatasetError: no training records
        TrainingDivergedError: non-finite activations, loss or parameters
    """
    log = log or logger
    if len(train_set) == 0:
        raise EmptyDatasetError("Training set is empty")
    has_val = val_set is not None and len(val_set) > 0

    model = model.copy()
    params = list(model.parameters.values())
    optimizer = AdamState.for_model(model, tc.lr)
    shuffle_rng = np.random.default_rng(tc.seed)
    n = len(train_set)

    result = TrainResult(model=model)
    best_score = np.inf
    best_state = model.state()
    step = 0

    for epoch in range(1, tc.epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, tc.batch_size):
            if tc.max_steps is not None and step >= tc.max_steps:
                break
            batch = train_set.subset(order[start : start + tc.batch_size])
            tape = Tape()
            try:
                with tape.recording():
                    predictions = forward(
                        model,
                        batch.ids,
                        batch.attention_mask,
                        batch.descriptors,
                        train=True,
                        seed=tc.seed,
                        step=step,
                        dropout_rate=tc.dropout_rate,
                    )
                    loss = mse_loss(predictions, batch.targets)
                gradients = backward(loss, params)
            except NonFiniteError as e:
                raise TrainingDivergedError(epoch, step, str(e)) from e

            clip_global_norm(gradients, tc.grad_clip)
            optimizer.update(model, gradients)
            step += 1
            if not all(np.all(np.isfinite(p.data)) for p in params):
                raise TrainingDivergedError(
                    epoch, step, "non-finite parameters after update"
                )

        try:
            train_mse = mean_squared_error(model, train_set)
            val_mse = mean_squared_error(model, val_set) if has_val else None
        except NonFiniteError as e:
            raise TrainingDivergedError(epoch, step, str(e)) from e

        result.history.append(
            EpochRecord(
                epoch=epoch, train_mse=train_mse, val_mse=val_mse, steps=step
            )
        )
        score = val_mse if val_mse is not None else train_mse
        if score < best_score:
            best_score = score
            best_state = model.state()
            result.best_epoch = epoch
        log.debug(
            f"epoch {epoch}: train MSE {train_mse:.6f}"
            + (f", val MSE {val_mse:.6f}" if val_mse is not None else "")
        )
        if tc.max_steps is not None and step >= tc.max_steps:
            break

    model.load_state(best_state)
    result.steps = step
    log.info(
        f"Training finished after {step} steps; "
        f"best epoch {result.best_epoch} "
        f"(MSE {best_score:.6f})"
    )
    return result


def expand_grid(grid: str) -> list[dict[str, str]]:
    """
    Cartesian product of a grid string, first key varying slowest

    ``"lr=1e-3,3e-4;d_model=32,64"`` gives four candidates. List-valued
    fields use '/' between items (``mlp_hidden=128/64,64``). An empty grid
    is a single candidate with no overrides.

    Raises:
        InvalidConfigError: unknown key or malformed entry
        EmptyGridError: a key with no values
    """
    if not grid.strip():
        return [{}]
    keys: list[str] = []
    choices: list[list[str]] = []
    for entry in grid.split(";"):
        if not entry.strip():
            continue
        if "=" not in entry:
            raise InvalidConfigError(f"Grid entry without '=': '{entry}'")
        key, values = entry.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in GRID_KEYS:
            raise InvalidConfigError(f"Unknown grid key '{key}'")
        if key in keys:
            raise InvalidConfigError(f"Grid key '{key}' repeated")
        parsed = [v.strip() for v in values.split(",") if v.strip()]
        if not parsed:
            raise EmptyGridError(f"Grid key '{key}' has no values")
        for value in parsed:
            if GRID_KEYS[key] is not str:
                try:
                    GRID_KEYS[key](value)
                except ValueError as e:
                    raise InvalidConfigError(
                        f"Grid value '{value}' for '{key}' is not "
                        f"{GRID_KEYS[key].__name__}"
                    ) from e
        keys.append(key)
        choices.append(
            [
                value.replace("/", ",") if key == "mlp_hidden" else value
                for value in parsed
            ]
        )
    return [
        dict(zip(keys, combo, strict=True))
        for combo in itertools.product(*choices)
    ]


@dataclass(frozen=True)
class CandidateScore:
    index: int
    holdout_rmse: float


@dataclass(frozen=True)
class SearchResult:
    best_index: int
    train_config: TrainConfig
    model_config: ModelConfig
    scores: list[CandidateScore]


def hyperparameter_search(
    grid: list[tuple[TrainConfig, ModelConfig]],
    train_set: FeatureBatch,
    holdout: FeatureBatch,
    log: RunContextAdapter | None = None,
) -> SearchResult:
    """
    Train every candidate and keep the lowest hold-out RMSE

    Ties go to the earliest grid index.

    Raises:
        EmptyGridError: no candidates
    """
    log = log or logger
    if not grid:
        raise EmptyGridError("Hyper-parameter grid is empty")

    scores: list[CandidateScore] = []
    best_index = 0
    for index, (tc, mc) in enumerate(grid):
        candidate_log = log.with_context(f"candidate {index + 1}/{len(grid)}")
        trained = train(
            init_model(mc, tc.seed), train_set, None, tc, candidate_log
        )
        predictions = predict_batch(
            trained.model,
            holdout.ids,
            holdout.attention_mask,
            holdout.descriptors,
        )
        score = rmse(clamp_yield(predictions), holdout.targets)
        scores.append(CandidateScore(index=index, holdout_rmse=score))
        candidate_log.info(f"hold-out RMSE {score * 100:.2f}")
        if score < scores[best_index].holdout_rmse:
            best_index = index

    best_tc, best_mc = grid[best_index]
    return SearchResult(
        best_index=best_index,
        train_config=best_tc,
        model_config=best_mc,
        scores=scores,
    )
