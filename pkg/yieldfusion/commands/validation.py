"""
validate command: ingestion checks for a dataset and descriptor table
"""

from pathlib import Path

import typer
from rich.table import Table
from services.descriptor_exceptions import MissingCompoundError
from services.descriptor_service import missing_compounds, parse_compounds
from services.feature_service import reaction_tokens
from services.report_service import ReportWriter
from services.smiles_exceptions import SequenceTooLongError
from services.smiles_service import build_vocab
from utils.log_context import get_run_logger

from commands.common import ConfigOption, console, load_inputs, prepare_run

logger = get_run_logger(__name__)


def validate(ctx: typer.Context, config: Path | None = ConfigOption):
    """
    Check that a dataset (and descriptor table) can be ingested

    Exits 0 when clean, 2 for format problems, 3 when descriptor
    compounds are missing.
    """
    run = prepare_run(ctx, config)
    inputs = load_inputs(run)
    records = inputs.dataset.records

    sequences = [reaction_tokens(record) for record in records]
    vocab = build_vocab(sequences)
    longest = max(len(sequence) for sequence in sequences)
    if inputs.table is not None:
        missing = missing_compounds(records, inputs.table)
        parsed = None
    else:
        missing = []
        parsed = len(parse_compounds(records))

    report = {
        "dataset": str(run.dataset),
        "schema": inputs.schema.name,
        "records": len(records),
        "clamped_rows": inputs.dataset.clamped_rows,
        "vocabulary_size": len(vocab),
        "longest_reaction_tokens": longest,
        "max_len": run.max_len,
        "descriptor_table": str(run.descriptors) if run.descriptors else None,
        "descriptor_compounds": len(inputs.table) if inputs.table else None,
        "missing_compounds": missing,
        "parsed_compounds": parsed,
    }
    ReportWriter(run.output_dir).write_json("validation.json", report)

    table = Table(title="Ingestion report")
    table.add_column("Check")
    table.add_column("Value", justify="right")
    table.add_row("Records", f"{len(records)} records")
    table.add_row("Clamped yields", str(inputs.dataset.clamped_rows))
    table.add_row("Vocabulary size", str(len(vocab)))
    table.add_row(
        "Longest reaction (tokens)", f"{longest} / {run.max_len - 1}"
    )
    table.add_row("Missing descriptor compounds", str(len(missing)))
    if parsed is not None:
        table.add_row("Parsed compounds", str(parsed))
    console.print(table)

    if missing:
        raise MissingCompoundError(missing)
    if longest + 1 > run.max_len:
        raise SequenceTooLongError(longest, run.max_len)
    logger.info("Validation clean")
