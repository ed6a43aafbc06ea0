"""
oos command: group-disjoint or predefined out-of-sample evaluation
"""

from pathlib import Path

import typer
from models.reaction import get_schema
from models.report import SplitResult
from services.dataset_service import load_predefined_splits
from services.evaluation_service import evaluate_split, run_splits
from services.metrics_service import aggregate
from services.report_service import ReportWriter, metrics_payload, oos_markdown
from services.split_service import build_splits, split_groups
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


def oos_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    group_role: str | None = typer.Option(
        None, "--group-role", help="Role whose values are held out"
    ),
    partitions: int | None = typer.Option(
        None, "--partitions", help="Number of contiguous group blocks"
    ),
    train_files: list[Path] | None = typer.Option(
        None, "--train-file", help="Predefined split train CSV (repeatable)"
    ),
    test_files: list[Path] | None = typer.Option(
        None, "--test-file", help="Predefined split test CSV (repeatable)"
    ),
):
    """Evaluate on splits whose test groups never occur in training"""
    run = prepare_run(
        ctx, config, group_role=group_role, n_partitions=partitions
    )
    train_files = train_files or []
    test_files = test_files or []
    if len(train_files) != len(test_files):
        raise ConfigError("--train-file and --test-file must come in pairs")

    writer = ReportWriter(run.output_dir)
    with writer.transaction():
        if train_files:
            schema = get_schema(run.schema_name)
            table = load_table(run)
            results: list[SplitResult] = []
            duplicates = []
            held_out = []
            for index, (train_path, test_path) in enumerate(
                zip(train_files, test_files, strict=True), 1
            ):
                predefined = load_predefined_splits(
                    train_path, test_path, schema
                )
                duplicates.append(predefined.duplicate_rows)
                log = logger.with_context(
                    f"split {index}/{len(train_files)}"
                )
                outcome = evaluate_split(
                    predefined.dataset.records,
                    predefined.split,
                    run,
                    schema,
                    table,
                    log,
                )
                results.append(outcome.result)
            title = f"{schema.name} predefined out-of-sample splits"
        else:
            if run.group_role is None:
                raise ConfigError(
                    "oos needs --group-role or --train-file/--test-file pairs"
                )
            inputs = load_inputs(run)
            if run.group_role not in inputs.schema.roles:
                raise ConfigError(
                    f"'{run.group_role}' is not a role of {inputs.schema.name}"
                )
            records = inputs.dataset.records
            splits = build_splits(
                records, run.build_split_spec("out_of_sample")
            )
            held_out = [
                sorted(split_groups(records, split, run.group_role)[1])
                for split in splits
            ]
            results = run_splits(
                records,
                splits,
                run,
                inputs.schema,
                inputs.table,
                command="oos",
            )
            duplicates = []
            title = (
                f"{inputs.schema.name} out-of-sample by {run.group_role} "
                f"({run.n_partitions} splits)"
            )

        summary = aggregate([result.metrics for result in results])
        payload = metrics_payload(results, summary)
        if duplicates:
            payload["duplicate_rows"] = duplicates
        if held_out:
            payload["held_out_groups"] = held_out
        writer.write_json("oos.json", payload)
        writer.write_markdown("oos.md", oos_markdown(title, results, summary))

    console.print(
        f"Average R² {summary.r2_mean:.3f}   "
        f"Average RMSE {summary.rmse_mean:.1f}"
    )
