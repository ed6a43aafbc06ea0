"""
yieldfusion CLI - reaction yield prediction from SMILES and descriptors
"""

import functools
import os
import sys
from collections.abc import Callable

import typer
from commands.common import CONTEXT_SETTINGS
from commands.gradcheck import GradCheckFailedError, gradcheck_command
from commands.out_of_sample import oos_command
from commands.suggestions import benchmark_command, suggest_command
from commands.synthesize import synthesize_command
from commands.training import eval_command, search_command, train_command
from commands.validation import validate
from models.reaction import UnknownSchemaError
from services.dataset_exceptions import (
    DatasetError,
    EmptySplitError,
    SplitError,
)
from services.descriptor_exceptions import (
    DescriptorError,
    EmptyInputError,
    MissingCompoundError,
)
from services.evaluation_exceptions import (
    BadKError,
    DuplicateConditionError,
    EmptyMetricInputError,
    EvaluationError,
    UnknownPairError,
)
from services.model_exceptions import (
    BadMagicError,
    ChannelLengthMismatchError,
    CheckpointIoError,
    CheckpointShapeMismatchError,
    EmptyDatasetError,
    EmptyGridError,
    InvalidConfigError,
    ModelError,
    VersionMismatchError,
)
from services.smiles_exceptions import SmilesError
from utils.config_loader import ConfigError
from utils.log_context import get_run_logger
from utils.logging_config import setup_logging
from utils.tensor import TensorError

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_INPUT_FORMAT = 2
EXIT_MISSING_DATA = 3
EXIT_UNKNOWN_ENTITY = 4

# Looked up along the exception's MRO, most specific class first
EXIT_CODES: dict[type[BaseException], int] = {
    ConfigError: EXIT_INPUT_FORMAT,
    DatasetError: EXIT_INPUT_FORMAT,
    SplitError: EXIT_INPUT_FORMAT,
    EmptySplitError: EXIT_MISSING_DATA,
    SmilesError: EXIT_INPUT_FORMAT,
    DescriptorError: EXIT_INPUT_FORMAT,
    MissingCompoundError: EXIT_MISSING_DATA,
    EmptyInputError: EXIT_MISSING_DATA,
    ModelError: EXIT_GENERIC,
    InvalidConfigError: EXIT_INPUT_FORMAT,
    ChannelLengthMismatchError: EXIT_INPUT_FORMAT,
    EmptyGridError: EXIT_INPUT_FORMAT,
    EmptyDatasetError: EXIT_MISSING_DATA,
    CheckpointIoError: EXIT_MISSING_DATA,
    BadMagicError: EXIT_INPUT_FORMAT,
    VersionMismatchError: EXIT_INPUT_FORMAT,
    CheckpointShapeMismatchError: EXIT_INPUT_FORMAT,
    EvaluationError: EXIT_GENERIC,
    DuplicateConditionError: EXIT_INPUT_FORMAT,
    BadKError: EXIT_INPUT_FORMAT,
    EmptyMetricInputError: EXIT_MISSING_DATA,
    UnknownPairError: EXIT_UNKNOWN_ENTITY,
    UnknownSchemaError: EXIT_UNKNOWN_ENTITY,
    FileNotFoundError: EXIT_MISSING_DATA,
    TensorError: EXIT_GENERIC,
    GradCheckFailedError: EXIT_GENERIC,
}

setup_logging(os.getenv("LOG_LEVEL", "INFO"))
logger = get_run_logger(__name__)


def exit_code_for(error: BaseException) -> int:
    for cls in type(error).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return EXIT_GENERIC


def handle_errors(func: Callable) -> Callable:
    """Turn domain exceptions into a stderr message and an exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (typer.Exit, typer.Abort):
            raise
        except Exception as e:
            code = exit_code_for(e)
            logger.debug(f"{type(e).__name__} -> exit {code}", exc_info=True)
            print(f"Error: {e}", file=sys.stderr)
            raise typer.Exit(code=code) from e

    return wrapper


app = typer.Typer(
    name="yieldfusion",
    help="Reaction yield prediction: SMILES transformer + descriptor MLP",
    no_args_is_help=True,
    add_completion=False,
)

COMMANDS: dict[str, Callable] = {
    "validate": validate,
    "train": train_command,
    "eval": eval_command,
    "search": search_command,
    "oos": oos_command,
    "suggest": suggest_command,
    "benchmark-conditions": benchmark_command,
    "gradcheck": gradcheck_command,
    "synthesize": synthesize_command,
}

for name, command in COMMANDS.items():
    app.command(name, context_settings=CONTEXT_SETTINGS)(
        handle_errors(command)
    )


if __name__ == "__main__":
    app()
