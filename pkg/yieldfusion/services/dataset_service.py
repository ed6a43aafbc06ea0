"""
Dataset Service
Loads HTE reaction CSVs for a schema into immutable reaction records.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import pandas as pd
from models.reaction import DatasetSchema, ReactionRecord, Split
from utils.log_context import get_run_logger

from .dataset_exceptions import (
    EmptySplitError,
    MalformedCsvError,
    MissingColumnError,
    UnparseableYieldError,
)
from .smiles_exceptions import SmilesError
from .smiles_service import tokenize

logger = get_run_logger(__name__)


@dataclass(frozen=True)
class ReactionDataset:
    schema: DatasetSchema
    records: tuple[ReactionRecord, ...]
    clamped_rows: int = 0
    source: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, indices) -> list[ReactionRecord]:
        return [self.records[i] for i in indices]


@dataclass(frozen=True)
class PredefinedSplit:
    dataset: ReactionDataset
    split: Split
    duplicate_rows: int = 0


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError as e:
        raise MalformedCsvError(f"{path}: file is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise MalformedCsvError(f"{path}: {e}") from e
    except OSError as e:
        raise MalformedCsvError(f"Cannot read {path}: {e}") from e
    frame.columns = [str(column).strip() for column in frame.columns]
    return frame


def _parse_yield(cell: str, row: int) -> float:
    try:
        value = float(cell)
    except ValueError as e:
        raise UnparseableYieldError(row, cell) from e
    if not math.isfinite(value):
        raise UnparseableYieldError(row, cell)
    return value


def load_dataset(
    path: str | Path, schema: DatasetSchema, allow_empty: bool = False
) -> ReactionDataset:
    """
    One record per data row; yields divided by 100 and clamped to [0, 1]

    Condition cells may be empty (no additive, etc.); reactant cells may not.

    Raises:
        MalformedCsvError: unreadable file, empty reactant cell, invalid
            SMILES or (unless ``allow_empty``) no data rows
        MissingColumnError: a schema column is absent
        UnparseableYieldError: yield cell is not a finite number
    """
    path = Path(path)
    frame = _read_frame(path)
    for column in schema.required_columns:
        if column not in frame.columns:
            raise MissingColumnError(column, str(path))
    if frame.empty and not allow_empty:
        raise MalformedCsvError(f"{path}: no data rows")

    name_columns = {
        role: schema.name_column(role)
        for role in schema.roles
        if schema.name_column(role) in frame.columns
    }

    records = []
    clamped = 0
    for row, values in enumerate(frame.to_dict("records"), start=1):
        components = []
        for role in schema.roles:
            smiles = str(values[schema.smiles_column(role)]).strip()
            if not smiles:
                if role in schema.reactant_roles:
                    raise MalformedCsvError(
                        f"{path}: data row {row} has an empty {role}"
                    )
            else:
                try:
                    tokenize(smiles)
                except SmilesError as e:
                    raise MalformedCsvError(
                        f"{path}: data row {row}, {role}: {e}"
                    ) from e
            components.append((role, smiles))

        raw = _parse_yield(str(values[schema.yield_column]).strip(), row)
        fraction = raw / 100.0
        bounded = min(1.0, max(0.0, fraction))
        if bounded != fraction:
            clamped += 1

        names = {
            role: str(values[column]).strip()
            for role, column in name_columns.items()
            if str(values[column]).strip()
        }
        records.append(
            ReactionRecord(
                components=tuple(components),
                yield_fraction=bounded,
                raw_yield=raw,
                names=names,
            )
        )

    logger.info(
        f"Loaded {len(records)} records from {path.name} "
        f"({clamped} yields clamped)"
    )
    return ReactionDataset(
        schema=schema,
        records=tuple(records),
        clamped_rows=clamped,
        source=str(path),
    )


def load_predefined_splits(
    train_path: str | Path, test_path: str | Path, schema: DatasetSchema
) -> PredefinedSplit:
    """
    Concatenate a train and a test file into one dataset and split

    Test rows whose components also occur in the train file are allowed
    and counted.

    Raises:
        EmptySplitError: either file has no data rows
        plus every load_dataset error
    """
    train = load_dataset(train_path, schema, allow_empty=True)
    test = load_dataset(test_path, schema, allow_empty=True)
    if len(test) == 0:
        raise EmptySplitError(f"{test_path}: test file has no data rows")
    if len(train) == 0:
        raise EmptySplitError(f"{train_path}: train file has no data rows")

    train_keys = {record.components for record in train.records}
    duplicates = sum(
        record.components in train_keys for record in test.records
    )
    if duplicates:
        logger.warning(
            f"{duplicates} test rows of {Path(test_path).name} also appear "
            f"in {Path(train_path).name}"
        )

    n_train = len(train)
    dataset = ReactionDataset(
        schema=schema,
        records=train.records + test.records,
        clamped_rows=train.clamped_rows + test.clamped_rows,
        source=f"{train.source}+{test.source}",
    )
    split = Split(
        train_indices=tuple(range(n_train)),
        test_indices=tuple(range(n_train, len(dataset))),
        label=Path(test_path).stem,
    )
    return PredefinedSplit(
        dataset=dataset, split=split, duplicate_rows=duplicates
    )
