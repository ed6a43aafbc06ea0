"""
gradcheck command: finite-difference check of the fusion model's gradients
"""

from pathlib import Path

import numpy as np
import typer
from models.config import ModelConfig
from models.reaction import get_schema
from rich.table import Table
from services.feature_service import FeatureBuilder, reaction_tokens
from services.fusion_model import forward, init_model
from services.report_service import ReportWriter
from services.synthetic_service import generate_synthetic
from utils.gradcheck import (
    DEFAULT_STEP,
    GradCheckResult,
    grad_check,
    sample_coordinates,
)
from utils.log_context import get_run_logger
from utils.tensor import corrupted_backward, mse_loss

from commands.common import ConfigOption, console, prepare_run

logger = get_run_logger(__name__)

DEFAULT_TOLERANCE = 1e-4
DEFAULT_COORDINATES = 240
GRADCHECK_BATCH = 6
# Targets scaled so the loss stays near 1e-2
TARGET_SCALE = 0.1


class GradCheckFailedError(Exception):
    """Analytic and numeric gradients disagree beyond the tolerance"""

    pass


def tiny_model_config(
    vocab_size: int, descriptor_dim: int, max_len: int
) -> ModelConfig:
    return ModelConfig(
        d_model=8,
        n_heads=2,
        n_layers=1,
        ff_dim=16,
        max_len=max_len,
        vocab_size=vocab_size,
        mlp_hidden=[8, 4],
        descriptor_dim=descriptor_dim,
        dropout_rate=0.0,
    )


def model_gradient_check(
    seed: int,
    n_coordinates: int = DEFAULT_COORDINATES,
    step: float = DEFAULT_STEP,
    schema_name: str = "buchwald_hartwig",
) -> GradCheckResult:
    """
    Grad-check a tiny multimodal model on a few synthetic reactions

    Coordinates are drawn round-robin so every parameter group is probed.
    """
    synthetic = generate_synthetic(get_schema(schema_name), seed)
    records = synthetic.dataset.records
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(records), size=GRADCHECK_BATCH, replace=False)
    sample = [records[i] for i in sorted(chosen)]

    longest = max(len(reaction_tokens(record)) for record in sample)
    features = FeatureBuilder.fit(
        sample, synthetic.dataset.schema, max_len=longest + 1
    )
    batch = features.transform(sample)
    config = tiny_model_config(
        features.vocab_size, features.descriptor_dim, longest + 1
    )
    model = init_model(config, seed)
    targets = batch.targets * TARGET_SCALE

    def loss_fn():
        predictions = forward(
            model, batch.ids, batch.attention_mask, batch.descriptors
        )
        return mse_loss(predictions, targets)

    coordinates = sample_coordinates(model.parameters, n_coordinates, seed)
    logger.info(
        f"Checking {len(coordinates)} coordinates over "
        f"{len(model.parameters)} parameter groups ({model.n_parameters} "
        f"parameters)"
    )
    return grad_check(loss_fn, model.parameters, coordinates, h=step)


def gradcheck_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    coordinates: int = typer.Option(
        DEFAULT_COORDINATES, "--coordinates", min=1
    ),
    step: float = typer.Option(DEFAULT_STEP, "--step"),
    tolerance: float = typer.Option(DEFAULT_TOLERANCE, "--tolerance"),
    corrupt_backward: str | None = typer.Option(
        None, "--corrupt-backward", hidden=True
    ),
):
    """Compare tape gradients with central differences on a tiny model"""
    run = prepare_run(ctx, config)
    if corrupt_backward is not None:
        logger.warning(f"Backward of '{corrupt_backward}' is corrupted")
        with corrupted_backward(corrupt_backward):
            result = model_gradient_check(
                run.seed, coordinates, step, run.schema_name
            )
    else:
        result = model_gradient_check(
            run.seed, coordinates, step, run.schema_name
        )

    worst = result.worst
    passed = result.passed(tolerance)
    ReportWriter(run.output_dir).write_json(
        "gradcheck.json",
        {
            "coordinates": len(result.checks),
            "groups": result.groups(),
            "step": step,
            "tolerance": tolerance,
            "max_relative_error": result.max_relative_error,
            "worst": str(worst.coordinate) if worst else None,
            "passed": passed,
        },
    )

    table = Table(title="Gradient check")
    table.add_column("Coordinates", justify="right")
    table.add_column("Groups", justify="right")
    table.add_column("Max relative error", justify="right")
    table.add_column("Worst coordinate")
    table.add_row(
        str(len(result.checks)),
        str(len(result.groups())),
        f"{result.max_relative_error:.3e}",
        str(worst.coordinate) if worst else "",
    )
    console.print(table)

    if not passed:
        raise GradCheckFailedError(
            f"Max relative error {result.max_relative_error:.3e} >= "
            f"{tolerance:g} at {worst.coordinate}"
        )
