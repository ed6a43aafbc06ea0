"""
Shared plumbing for CLI commands: run configuration, logging and inputs
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import typer
from models.config import RunConfig
from models.reaction import DatasetSchema, get_schema
from rich.console import Console
from services.dataset_service import ReactionDataset, load_dataset
from services.descriptor_service import DescriptorTable, load_descriptor_table
from utils.config_loader import (
    ConfigError,
    load_run_config,
    parse_override_args,
)
from utils.logging_config import setup_logging

# Commands accept generic '--key value' overrides mirroring RunConfig fields
CONTEXT_SETTINGS = {"allow_extra_args": True, "ignore_unknown_options": True}

console = Console()

ConfigOption = typer.Option(
    None, "--config", "-c", help="key=value run configuration file"
)


@dataclass
class RunInputs:
    config: RunConfig
    schema: DatasetSchema
    dataset: ReactionDataset
    table: DescriptorTable | None


def prepare_run(
    ctx: typer.Context, config_path: Path | None, **explicit: Any
) -> RunConfig:
    """Merge config file, explicit options and '--key value' extras"""
    overrides = parse_override_args(list(ctx.args))
    overrides.update({k: v for k, v in explicit.items() if v is not None})
    config = load_run_config(config_path, overrides)
    setup_logging(config.log_level, config.output_dir)
    return config


def load_table(config: RunConfig) -> DescriptorTable | None:
    if config.descriptors is None:
        return None
    return load_descriptor_table(config.descriptors)


def load_inputs(config: RunConfig) -> RunInputs:
    """
    Schema, dataset and optional descriptor table of a run

    Raises:
        ConfigError: no dataset configured
    """
    if config.dataset is None:
        raise ConfigError("No dataset given (--dataset or dataset= in config)")
    schema = get_schema(config.schema_name)
    return RunInputs(
        config=config,
        schema=schema,
        dataset=load_dataset(config.dataset, schema),
        table=load_table(config),
    )
