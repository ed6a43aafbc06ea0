"""
Split Service
Random train/test folds, the hyper-parameter hold-out and group-disjoint
out-of-sample splits. Every constructor is a pure function of its inputs.
"""

from collections.abc import Sequence

import numpy as np
from models.config import SplitSpec
from models.reaction import ReactionRecord, Split

from .dataset_exceptions import (
    InvalidRatioError,
    TooFewGroupsError,
    TooFewPartitionsError,
    TooSmallError,
)

HOLDOUT_DIVISOR = 7


def random_folds(n: int, ratio: float, seed: int, size: int) -> list[Split]:
    """
    ``n`` independent seeded shuffles; first floor(ratio * size) rows train

    Raises:
        InvalidRatioError: ratio outside (0, 1) or a side would be empty
    """
    if not 0.0 < ratio < 1.0:
        raise InvalidRatioError(f"Train ratio must be in (0, 1): {ratio}")
    if size < 2:
        raise InvalidRatioError(f"Need at least 2 rows to split, got {size}")
    n_train = int(np.floor(ratio * size))
    if n_train == 0 or n_train == size:
        raise InvalidRatioError(
            f"Ratio {ratio} of {size} rows leaves one side empty"
        )

    folds = []
    for fold, child in enumerate(np.random.SeedSequence(seed).spawn(n), 1):
        order = np.random.default_rng(child).permutation(size)
        folds.append(
            Split(
                train_indices=tuple(int(i) for i in order[:n_train]),
                test_indices=tuple(int(i) for i in order[n_train:]),
                label=f"fold {fold}",
            )
        )
    return folds


def hyperparam_subset(
    train_indices: Sequence[int], seed: int
) -> tuple[list[int], list[int]]:
    """
    Seeded hold-out of floor(|train| / 7) indices

    Returns (search_train, search_holdout).

    Raises:
        TooSmallError: fewer than 7 training rows
    """
    indices = np.asarray(train_indices, dtype=np.int64)
    if len(indices) < HOLDOUT_DIVISOR:
        raise TooSmallError(
            f"Need at least {HOLDOUT_DIVISOR} training rows for a hold-out, "
            f"got {len(indices)}"
        )
    n_holdout = len(indices) // HOLDOUT_DIVISOR
    order = np.random.default_rng(seed).permutation(len(indices))
    holdout = indices[order[:n_holdout]]
    search_train = indices[order[n_holdout:]]
    return [int(i) for i in search_train], [int(i) for i in holdout]


def out_of_sample_splits(
    records: Sequence[ReactionRecord], group_role: str, n_partitions: int
) -> list[Split]:
    """
    Partition sorted distinct values of ``group_role`` into contiguous
    blocks; split i tests on the records of block i

    Raises:
        TooFewPartitionsError: fewer than two partitions
        TooFewGroupsError: fewer distinct values than partitions
    """
    if n_partitions < 2:
        raise TooFewPartitionsError(
            f"Out-of-sample evaluation needs at least 2 partitions, "
            f"got {n_partitions}"
        )
    values = [record.smiles_for(group_role) for record in records]
    groups = sorted(set(values))
    if len(groups) < n_partitions:
        raise TooFewGroupsError(
            f"'{group_role}' has {len(groups)} distinct values, "
            f"fewer than {n_partitions} partitions"
        )

    splits = []
    blocks = np.array_split(np.array(groups), n_partitions)
    for block, members in enumerate(blocks, 1):
        test_groups = set(members.tolist())
        test = tuple(i for i, v in enumerate(values) if v in test_groups)
        train = tuple(i for i, v in enumerate(values) if v not in test_groups)
        splits.append(
            Split(
                train_indices=train,
                test_indices=test,
                label=f"{group_role} split {block}/{n_partitions}",
            )
        )
    return splits


def split_groups(
    records: Sequence[ReactionRecord], split: Split, role: str
) -> tuple[set[str], set[str]]:
    """Distinct ``role`` values on the train and test side of a split"""
    train = {records[i].smiles_for(role) for i in split.train_indices}
    test = {records[i].smiles_for(role) for i in split.test_indices}
    return train, test


def build_splits(
    records: Sequence[ReactionRecord], spec: SplitSpec
) -> list[Split]:
    """Random folds or group-disjoint splits, as ``spec`` describes"""
    if spec.kind == "out_of_sample":
        return out_of_sample_splits(
            records, spec.group_role, spec.n_partitions
        )
    return random_folds(spec.n_folds, spec.ratio, spec.seed, len(records))
