"""
Descriptor Service
Fixed-layout descriptor vectors per reaction: ingested descriptor tables
(DFT-style CSVs) or built-in structural descriptors, plus train-set
normalization.
"""

import hashlib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd
from models.reaction import ReactionRecord
from utils.log_context import get_run_logger

from .descriptor_exceptions import (
    DuplicateKeyError,
    EmptyInputError,
    InconsistentWidthError,
    LengthMismatchError,
    MalformedDescriptorCsvError,
    MissingCompoundError,
    NonFiniteValueError,
)
from .smiles_exceptions import SmilesError
from .smiles_service import AROMATIC_ORDER, Molecule, parse_smiles, tokenize

logger = get_run_logger(__name__)

ELEMENT_ALPHABET = (
    "B", "C", "N", "O", "P", "S", "F", "Cl",
    "Br", "I", "Si", "Sn", "Zn", "Pd", "K", "Na",
)  # fmt: skip
BOND_ORDERS = (1, 2, 3, AROMATIC_ORDER)
STRUCTURAL_FEATURES = (
    [f"count_{symbol}" for symbol in ELEMENT_ALPHABET]
    + ["count_other"]
    + ["bonds_single", "bonds_double", "bonds_triple", "bonds_aromatic"]
    + ["ring_count", "aromatic_atoms", "total_atoms", "heteroatom_fraction"]
)
STRUCTURAL_LAYOUT = "structural-v1"
STRUCTURAL_WIDTH = len(STRUCTURAL_FEATURES)


@dataclass(frozen=True)
class DescriptorVector:
    values: np.ndarray
    layout_id: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InconsistentWidthError("Descriptor vector must be 1-D")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError(-1, self.layout_id)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DescriptorTable:
    entries: dict[str, DescriptorVector]
    layout_id: str
    columns: tuple[str, ...] = field(default_factory=tuple)

    @property
    def width(self) -> int:
        return len(self.columns)

    def __contains__(self, smiles: str) -> bool:
        return smiles in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise LengthMismatchError("mean and std lengths differ")
        if np.any(self.std <= 0):
            raise ValueError("Normalizer std must be positive")

    def __len__(self) -> int:
        return len(self.mean)


def structural_descriptors(molecule: Molecule) -> DescriptorVector:
    """
    25 structural counts for one molecule

    Layout: element counts over a 16-symbol alphabet, an 'other' count,
    bond counts by order (single, double, triple, aromatic), ring count,
    aromatic atoms, total atoms and the heteroatom (non-carbon) fraction.
    """
    values = np.zeros(STRUCTURAL_WIDTH, dtype=np.float64)
    element_index = {symbol: i for i, symbol in enumerate(ELEMENT_ALPHABET)}
    other = len(ELEMENT_ALPHABET)

    for atom in molecule.atoms:
        values[element_index.get(atom.symbol, other)] += 1

    bond_offset = other + 1
    for bond in molecule.bonds:
        values[bond_offset + BOND_ORDERS.index(bond.order)] += 1

    total = len(molecule.atoms)
    tail = bond_offset + len(BOND_ORDERS)
    values[tail] = molecule.ring_count
    values[tail + 1] = sum(atom.aromatic for atom in molecule.atoms)
    values[tail + 2] = total
    if total:
        heteroatoms = sum(atom.symbol != "C" for atom in molecule.atoms)
        values[tail + 3] = heteroatoms / total

    return DescriptorVector(values=values, layout_id=STRUCTURAL_LAYOUT)


@lru_cache(maxsize=4096)
def structural_for_smiles(smiles: str) -> DescriptorVector:
    return structural_descriptors(parse_smiles(smiles))


def _layout_id(columns: Sequence[str]) -> str:
    digest = hashlib.sha256(",".join(columns).encode("utf-8")).hexdigest()
    return f"table-{digest[:12]}"


def load_descriptor_table(path: str | Path) -> DescriptorTable:
    """
    Read a descriptor CSV with header ``smiles,<name1>,...,<nameK>``

    Raises:
        MalformedDescriptorCsvError: unreadable file, missing smiles column,
            invalid SMILES keys or non-numeric cells
        InconsistentWidthError: row with a different number of fields
        NonFiniteValueError: NaN/inf cell (names the data row)
        DuplicateKeyError: compound listed twice
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skipinitialspace=True,
        )
    except pd.errors.ParserError as e:
        raise InconsistentWidthError(f"{path}: {e}") from e
    except (OSError, UnicodeDecodeError, pd.errors.EmptyDataError) as e:
        raise MalformedDescriptorCsvError(f"Cannot read {path}: {e}") from e

    columns = [str(column).strip() for column in frame.columns]
    if not columns or columns[0] != "smiles":
        raise MalformedDescriptorCsvError(
            f"{path}: first header column must be 'smiles'"
        )
    if len(columns) < 2:
        raise MalformedDescriptorCsvError(f"{path}: no descriptor columns")
    if len(set(columns)) != len(columns):
        raise MalformedDescriptorCsvError(f"{path}: repeated header names")

    descriptor_columns = tuple(columns[1:])
    layout_id = _layout_id(columns)
    entries: dict[str, DescriptorVector] = {}

    for row_number, row in enumerate(frame.itertuples(index=False), start=1):
        cells = ["" if pd.isna(cell) else str(cell).strip() for cell in row]
        smiles = cells[0]
        if any(cell == "" for cell in cells):
            raise InconsistentWidthError(
                f"{path}: data row {row_number} has missing fields"
            )
        try:
            tokenize(smiles)
        except SmilesError as e:
            raise MalformedDescriptorCsvError(
                f"{path}: data row {row_number} has invalid SMILES key: {e}"
            ) from e
        if smiles in entries:
            raise DuplicateKeyError(
                f"{path}: compound '{smiles}' repeated in data row "
                f"{row_number}"
            )

        values = np.empty(len(descriptor_columns), dtype=np.float64)
        for i, (column, cell) in enumerate(
            zip(descriptor_columns, cells[1:], strict=True)
        ):
            try:
                values[i] = float(cell)
            except ValueError as e:
                raise MalformedDescriptorCsvError(
                    f"{path}: data row {row_number}, column '{column}' is "
                    f"not a number: '{cell}'"
                ) from e
            if not np.isfinite(values[i]):
                raise NonFiniteValueError(row_number, column)

        entries[smiles] = DescriptorVector(values=values, layout_id=layout_id)

    logger.info(
        f"Descriptor table loaded: {len(entries)} compounds x "
        f"{len(descriptor_columns)} descriptors ({layout_id})"
    )
    return DescriptorTable(
        entries=entries, layout_id=layout_id, columns=descriptor_columns
    )


def missing_compounds(
    records: Iterable[ReactionRecord], table: DescriptorTable
) -> list[str]:
    """Sorted non-empty component SMILES absent from the table"""
    missing = {
        smiles
        for record in records
        for smiles in record.smiles
        if smiles and smiles not in table
    }
    return sorted(missing)


def parse_compounds(records: Iterable[ReactionRecord]) -> list[str]:
    """
    Sorted non-empty component SMILES, each parsed for structural descriptors

    Raises:
        SmilesError: the first compound that does not parse
    """
    compounds = sorted(
        {smiles for record in records for smiles in record.smiles if smiles}
    )
    for smiles in compounds:
        structural_for_smiles(smiles)
    return compounds


def reaction_layout(table: DescriptorTable | None) -> str:
    return table.layout_id if table is not None else STRUCTURAL_LAYOUT


def reaction_descriptor(
    record: ReactionRecord, table: DescriptorTable | None = None
) -> DescriptorVector:
    """
    Concatenate per-component descriptors in schema column order

    Without a table the structural descriptors of each component are used.
    Empty components contribute a zero block of the per-compound width.
    """
    width = table.width if table is not None else STRUCTURAL_WIDTH
    layout_id = reaction_layout(table)
    blocks = []
    missing = []

    for smiles in record.smiles:
        if smiles == "":
            blocks.append(np.zeros(width))
        elif table is None:
            blocks.append(structural_for_smiles(smiles).values)
        elif smiles in table:
            blocks.append(table.entries[smiles].values)
        else:
            missing.append(smiles)

    if missing:
        raise MissingCompoundError(missing)

    return DescriptorVector(
        values=np.concatenate(blocks), layout_id=layout_id
    )


def fit_normalizer(train_vectors: Sequence[DescriptorVector]) -> Normalizer:
    """Per-dimension mean and population std; constant dims get std 1"""
    if not train_vectors:
        raise EmptyInputError("Cannot fit a normalizer on no vectors")
    widths = {len(vector) for vector in train_vectors}
    if len(widths) != 1:
        raise InconsistentWidthError(f"Mixed descriptor widths: {widths}")

    matrix = np.stack([vector.values for vector in train_vectors])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    # constant columns can carry round-off std (0.1 gives ~1e-17)
    std[np.ptp(matrix, axis=0) == 0] = 1.0
    return Normalizer(mean=mean, std=std)


def normalize(
    vector: DescriptorVector, normalizer: Normalizer
) -> DescriptorVector:
    """z-score with the normalizer's train-set statistics"""
    if len(vector) != len(normalizer):
        raise LengthMismatchError(
            f"Vector of length {len(vector)} vs normalizer "
            f"of length {len(normalizer)}"
        )
    return DescriptorVector(
        values=(vector.values - normalizer.mean) / normalizer.std,
        layout_id=vector.layout_id,
    )
