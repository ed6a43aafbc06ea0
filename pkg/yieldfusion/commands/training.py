"""
train / eval / search commands: the random-fold protocol
"""

from pathlib import Path

import typer
from models.config import RunConfig
from services.checkpoint_service import save_checkpoint
from services.evaluation_service import evaluate_split, run_splits
from services.feature_service import FeatureBuilder
from services.metrics_service import YIELD_SCALE, aggregate
from services.report_service import (
    ReportWriter,
    metrics_markdown,
    metrics_payload,
)
from services.split_service import (
    build_splits,
    hyperparam_subset,
    random_folds,
)
from services.training_service import expand_grid, hyperparameter_search
from utils.config_loader import ConfigError
from utils.log_context import get_run_logger

from commands.common import ConfigOption, console, load_inputs, prepare_run

logger = get_run_logger(__name__)


def train_command(ctx: typer.Context, config: Path | None = ConfigOption):
    """Train once on fold 1 and report its test metrics"""
    run = prepare_run(ctx, config)
    inputs = load_inputs(run)
    split = random_folds(1, run.split_ratio, run.seed, len(inputs.dataset))[0]
    writer = ReportWriter(run.output_dir)

    with writer.transaction():
        outcome = evaluate_split(
            inputs.dataset.records, split, run, inputs.schema, inputs.table
        )
        writer.track(
            save_checkpoint(
                outcome.predictor.model,
                writer.path("model.ckpt"),
                outcome.predictor.features.metadata(),
            )
        )
        writer.write_json("history.json", outcome.training.history_dict())
        summary = aggregate([outcome.result.metrics])
        writer.write_json(
            "metrics.json", metrics_payload([outcome.result], summary)
        )
        writer.write_markdown(
            "metrics.md",
            metrics_markdown(
                f"{inputs.schema.name} (train)", [outcome.result], summary
            ),
        )

    console.print(
        f"Test R² {outcome.result.metrics.r2:.3f}, "
        f"RMSE {outcome.result.metrics.rmse:.1f}"
    )


def eval_command(ctx: typer.Context, config: Path | None = ConfigOption):
    """Train and test on every random fold; report mean ± std"""
    run = prepare_run(ctx, config)
    inputs = load_inputs(run)
    folds = build_splits(inputs.dataset.records, run.build_split_spec())
    writer = ReportWriter(run.output_dir)

    with writer.transaction():
        results = run_splits(
            inputs.dataset.records,
            folds,
            run,
            inputs.schema,
            inputs.table,
            checkpoint_path=lambda i: writer.path(f"fold_{i + 1:02d}.ckpt"),
            on_checkpoint=writer.track,
            command="eval",
        )
        summary = aggregate([result.metrics for result in results])
        writer.write_json("metrics.json", metrics_payload(results, summary))
        writer.write_markdown(
            "metrics.md",
            metrics_markdown(
                f"{inputs.schema.name} ({len(folds)} random folds)",
                results,
                summary,
            ),
        )

    console.print(f"R² {summary.r2_text}   RMSE {summary.rmse_text}")


def _candidate_config(run: RunConfig, overrides: dict[str, str]) -> RunConfig:
    try:
        return RunConfig.model_validate({**run.model_dump(), **overrides})
    except ValueError as e:
        raise ConfigError(f"Invalid grid candidate {overrides}: {e}") from e


def search_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    grid: str | None = typer.Option(
        None, "--grid", help="e.g. 'lr=1e-3,3e-4;d_model=32,64'"
    ),
):
    """Hyper-parameter search on a 1/7 hold-out of fold 1's train set"""
    run = prepare_run(ctx, config, search_grid=grid)
    inputs = load_inputs(run)
    records = inputs.dataset.records
    fold = random_folds(1, run.split_ratio, run.seed, len(records))[0]
    search_rows, holdout_rows = hyperparam_subset(fold.train_indices, run.seed)
    search_records = [records[i] for i in search_rows]
    holdout_records = [records[i] for i in holdout_rows]

    features = FeatureBuilder.fit(
        search_records, inputs.schema, inputs.table, max_len=run.max_len
    )
    candidates = expand_grid(run.search_grid)
    configs = [_candidate_config(run, overrides) for overrides in candidates]
    grid_configs = [
        (
            candidate.build_train_config(),
            candidate.build_model_config(
                features.vocab_size, features.descriptor_dim
            ),
        )
        for candidate in configs
    ]

    result = hyperparameter_search(
        grid_configs,
        features.transform(search_records),
        features.transform(holdout_records),
    )
    payload = {
        "search_train": len(search_records),
        "holdout": len(holdout_records),
        "best_index": result.best_index,
        "best": candidates[result.best_index],
        "candidates": [
            {
                "index": score.index,
                "overrides": candidates[score.index],
                "holdout_rmse": score.holdout_rmse * YIELD_SCALE,
            }
            for score in result.scores
        ],
    }
    ReportWriter(run.output_dir).write_json("search.json", payload)
    console.print(
        f"Best candidate {result.best_index}: "
        f"{candidates[result.best_index] or 'base configuration'} "
        f"(hold-out RMSE "
        f"{result.scores[result.best_index].holdout_rmse * YIELD_SCALE:.1f})"
    )
