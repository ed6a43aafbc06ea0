"""
Evaluation Service
Train-and-test of one split and of a list of splits (folds, out-of-sample
blocks), optionally on a thread pool.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from models.config import RunConfig
from models.reaction import DatasetSchema, ReactionRecord, Split
from models.report import SplitResult
from utils.log_context import get_run_logger
from utils.run_state import RunStateManager

from .checkpoint_service import save_checkpoint
from .dataset_exceptions import TooSmallError
from .descriptor_service import DescriptorTable
from .feature_service import FeatureBuilder
from .fusion_model import init_model
from .metrics_service import compute_metrics
from .predictor import FusionPredictor
from .split_service import hyperparam_subset
from .training_service import TrainResult, train

logger = get_run_logger(__name__)


@dataclass
class SplitOutcome:
    result: SplitResult
    training: TrainResult
    predictor: FusionPredictor


def fit_predictor(
    train_records: Sequence[ReactionRecord],
    config: RunConfig,
    schema: DatasetSchema,
    table: DescriptorTable | None,
    log=None,
) -> tuple[FusionPredictor, TrainResult]:
    """
    Fit features and a fresh model on ``train_records``

    A seeded 1/7 of the records is held out for best-epoch selection when
    there are at least 7 of them.
    """
    log = log or logger
    features = FeatureBuilder.fit(
        train_records, schema, table, max_len=config.max_len
    )
    batch = features.transform(train_records)
    try:
        fit_rows, val_rows = hyperparam_subset(
            range(len(train_records)), config.seed
        )
    except TooSmallError:
        fit_rows, val_rows = list(range(len(train_records))), []

    model_config = config.build_model_config(
        features.vocab_size, features.descriptor_dim
    )
    model = init_model(model_config, config.seed)
    trained = train(
        model,
        batch.subset(fit_rows),
        batch.subset(val_rows) if val_rows else None,
        config.build_train_config(),
        log,
    )
    return FusionPredictor(trained.model, features), trained


def evaluate_split(
    records: Sequence[ReactionRecord],
    split: Split,
    config: RunConfig,
    schema: DatasetSchema,
    table: DescriptorTable | None,
    log=None,
) -> SplitOutcome:
    """Train on the split's train side, report metrics on its test side"""
    log = log or logger.with_context(split.label)
    train_records = [records[i] for i in split.train_indices]
    test_records = [records[i] for i in split.test_indices]

    predictor, trained = fit_predictor(
        train_records, config, schema, table, log
    )
    predictions = predictor.predict(test_records)
    actual = np.array([record.yield_fraction for record in test_records])
    metrics = compute_metrics(predictions, actual)
    log.info(f"test R² {metrics.r2:.3f}, RMSE {metrics.rmse:.1f}")

    result = SplitResult(
        label=split.label,
        n_train=len(train_records),
        n_test=len(test_records),
        metrics=metrics,
        best_epoch=trained.best_epoch,
    )
    return SplitOutcome(result=result, training=trained, predictor=predictor)


def run_splits(
    records: Sequence[ReactionRecord],
    splits: Sequence[Split],
    config: RunConfig,
    schema: DatasetSchema,
    table: DescriptorTable | None,
    checkpoint_path: Callable[[int], Path] | None = None,
    on_checkpoint: Callable[[Path], object] | None = None,
    command: str = "eval",
) -> list[SplitResult]:
    """
    Evaluate every split on up to ``config.workers`` threads

    Results come back in split order regardless of completion order. When
    ``checkpoint_path`` is given each split's model is saved to
    ``checkpoint_path(index)`` and passed to ``on_checkpoint``.
    """
    state = RunStateManager(command=command)
    for index, split in enumerate(splits):
        state.register(index, split.label)

    def run_one(index: int) -> None:
        split = splits[index]
        log = logger.with_context(
            f"{split.label} ({index + 1}/{len(splits)})"
        )
        state.start_unit(index)
        try:
            outcome = evaluate_split(
                records, split, config, schema, table, log
            )
            if checkpoint_path is not None:
                path = save_checkpoint(
                    outcome.predictor.model,
                    checkpoint_path(index),
                    outcome.predictor.features.metadata(),
                )
                if on_checkpoint is not None:
                    on_checkpoint(path)
        except Exception as e:
            state.fail_unit(index, str(e))
            raise
        state.finish_unit(index, outcome.result.model_dump(mode="json"))

    if config.workers > 1 and len(splits) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(run_one, i) for i in range(len(splits))]
            for future in futures:
                future.result()
    else:
        for index in range(len(splits)):
            run_one(index)

    logger.info(f"{command}: {state.counts()}")
    return [SplitResult.model_validate(r) for r in state.ordered_results()]
