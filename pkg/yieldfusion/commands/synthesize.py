"""
synthesize command: write a synthetic HTE-style dataset
"""

from pathlib import Path

import typer
from models.reaction import get_schema
from services.synthetic_service import generate_synthetic, write_synthetic
from utils.log_context import get_run_logger

from commands.common import ConfigOption, console, prepare_run

logger = get_run_logger(__name__)


def synthesize_command(
    ctx: typer.Context,
    config: Path | None = ConfigOption,
    out: Path = typer.Option(..., "--out", help="Dataset CSV to write"),
    descriptors_out: Path | None = typer.Option(
        None, "--descriptors-out", help="Also write a descriptor table CSV"
    ),
    noise: float = typer.Option(
        0.0, "--noise", min=0.0, help="Std of yield noise (0-100 scale)"
    ),
):
    """Every combination of built-in compound pools with a planted yield"""
    run = prepare_run(ctx, config)
    synthetic = generate_synthetic(
        get_schema(run.schema_name), run.seed, noise
    )
    write_synthetic(synthetic, out, descriptors_out)

    records = len(synthetic.dataset)
    console.print(f"Wrote {records} {run.schema_name} records to {out}")
    if descriptors_out is not None:
        console.print(f"Descriptor table written to {descriptors_out}")
