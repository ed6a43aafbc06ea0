"""
suggest / benchmark-conditions commands: condition ranking per reactant pair
"""

from collections.abc import Sequence
from pathlib import Path

import typer
from models.reaction import DatasetSchema, ReactionRecord, get_schema
from rich.table import Table
from services.checkpoint_service import read_checkpoint
from services.condition_service import (
    benchmark_conditions,
    candidate_conditions,
    rank_conditions,
    reactant_pairs,
)
from services.dataset_service import load_dataset
from services.evaluation_exceptions import UnknownPairError
from services.evaluation_service import fit_predictor
from services.feature_service import FeatureBuilder
from services.predictor import FusionPredictor
from services.report_service import (
    ReportWriter,
    optimization_markdown,
    suggestions_markdown,
)
from services.split_service import random_folds
from utils.config_loader import ConfigError
from utils.log_context import get_run_logger

from commands.common import (
    ConfigOption,
    console,
    load_inputs,
    load_table,
    prepare_run,
)

logger = get_run_logger(__name__)


def resolve_pair(
    records: Sequence[ReactionRecord], schema: DatasetSchema, text: str
) -> tuple[str, ...]:
    """
    Match 'a,b' against the reactant SMILES or display names of the records

    Raises:
        UnknownPairError: no reactant pair matches
    """
    parts = tuple(part.strip() for part in text.split(","))
    if len(parts) != len(schema.reactant_roles):
        raise UnknownPairError(parts)
    for pair in reactant_pairs(records, schema):
        for record in records:
            if record.project(schema.reactant_roles) != pair:
                continue
            names = tuple(
                record.names.get(role, "") for role in schema.reactant_roles
            )
            if all(
                part in (smiles, name)
                for part, smiles, name in zip(parts, pair, names, strict=True)
            ):
                return pair
            break
    raise UnknownPairError(parts)


def suggest_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    checkpoint: Path = typer.Option(..., "--checkpoint", help="model.ckpt"),
    pair: str = typer.Option(
        ..., "--pair", help="Reactants as 'electrophile,nucleophile'"
    ),
    top_n: int | None = typer.Option(None, "--top-n", min=1),
):
    """Rank condition combinations for one reactant pair"""
    run = prepare_run(ctx, config, top_n=top_n)
    if run.dataset is None:
        raise ConfigError("suggest needs --dataset for the condition space")

    loaded = read_checkpoint(checkpoint)
    schema = get_schema(loaded.metadata.get("schema", run.schema_name))
    features = FeatureBuilder.from_metadata(loaded.metadata, load_table(run))
    predictor = FusionPredictor(loaded.model, features)
    records = load_dataset(run.dataset, schema).records

    resolved = resolve_pair(records, schema, pair)
    ranked = rank_conditions(
        predictor, candidate_conditions(records, schema, resolved)
    )
    shown = ranked[: run.top_n]

    title = "Suggested conditions for " + " + ".join(resolved)
    writer = ReportWriter(run.output_dir)
    with writer.transaction():
        writer.write_json(
            "suggestions.json",
            {
                "pair": list(resolved),
                "top_n": run.top_n,
                "candidates": len(ranked),
                "suggestions": [s.model_dump(mode="json") for s in shown],
            },
        )
        writer.write_markdown(
            "suggestions.md", suggestions_markdown(title, shown)
        )

    table = Table(title=title)
    table.add_column("Rank", justify="right")
    for role in schema.condition_roles:
        table.add_column(role.replace("_", " ").title())
    table.add_column("Estimated", justify="right")
    table.add_column("Actual", justify="right")
    for rank, suggestion in enumerate(shown, 1):
        actual = suggestion.actual_yield
        table.add_row(
            str(rank),
            *suggestion.combo.display(),
            f"{suggestion.estimated_yield:.3f}",
            "" if actual is None else f"{actual:.3f}",
        )
    console.print(table)


def benchmark_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    whole_dataset: bool = typer.Option(
        False,
        "--whole-dataset",
        help="Rank every pair of the dataset (exploration, not a test score)",
    ),
):
    """Condition-optimization benchmark on fold 1's test split"""
    run = prepare_run(ctx, config)
    inputs = load_inputs(run)
    records = inputs.dataset.records
    fold = random_folds(1, run.split_ratio, run.seed, len(records))[0]
    train_records = [records[i] for i in fold.train_indices]

    if whole_dataset:
        scope = "whole dataset (exploration)"
        scored = list(records)
    else:
        scope = "test split"
        scored = [records[i] for i in fold.test_indices]

    predictor, _ = fit_predictor(
        train_records, run, inputs.schema, inputs.table
    )
    report, rankings = benchmark_conditions(
        predictor,
        scored,
        inputs.schema,
        scope=scope,
        k_percents=run.k_percents,
        trials=run.trials,
        seed=run.seed,
        top_n=run.top_n,
    )

    writer = ReportWriter(run.output_dir)
    with writer.transaction():
        writer.write_json("conditions.json", report.model_dump(mode="json"))
        writer.write_markdown(
            "conditions.md",
            optimization_markdown(report, inputs.schema.reactant_roles),
        )

    console.print(
        f"[{scope}] fraction of optimal {report.fraction_of_optimal:.3f} "
        f"(random baseline {report.random_fraction_of_optimal:.3f})"
    )
