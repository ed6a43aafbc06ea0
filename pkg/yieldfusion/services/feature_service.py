"""
Feature Service
Turns reaction records into the two model channels: encoded reaction SMILES
and normalized descriptor vectors. Vocabulary and normalizer are fitted on
training records only.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np
from models.reaction import DatasetSchema, ReactionRecord, get_schema
from utils.log_context import get_run_logger

from .descriptor_exceptions import InconsistentWidthError
from .descriptor_service import (
    DescriptorTable,
    Normalizer,
    fit_normalizer,
    normalize,
    reaction_descriptor,
    reaction_layout,
)
from .smiles_service import (
    TokenSequence,
    Vocab,
    assemble_reaction,
    build_vocab,
    encode,
    tokenize,
)

logger = get_run_logger(__name__)


@dataclass(frozen=True)
class FeatureBatch:
    """Model inputs for a list of records, row-aligned"""

    ids: np.ndarray
    attention_mask: np.ndarray
    descriptors: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "FeatureBatch":
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureBatch(
            ids=self.ids[indices],
            attention_mask=self.attention_mask[indices],
            descriptors=self.descriptors[indices],
            targets=self.targets[indices],
        )


@lru_cache(maxsize=16384)
def _reaction_tokens(components: tuple[str, ...]) -> TokenSequence:
    return tokenize(assemble_reaction(components))


def reaction_tokens(record: ReactionRecord) -> TokenSequence:
    """Token sequence of the record's reaction string"""
    return _reaction_tokens(record.smiles)


class FeatureBuilder:
    """Fitted vocabulary + descriptor normalizer for one training set"""

    def __init__(
        self,
        schema: DatasetSchema,
        vocab: Vocab,
        normalizer: Normalizer,
        max_len: int,
        table: DescriptorTable | None = None,
    ):
        self.schema = schema
        self.vocab = vocab
        self.normalizer = normalizer
        self.max_len = max_len
        self.table = table

    @classmethod
    def fit(
        cls,
        train_records: Sequence[ReactionRecord],
        schema: DatasetSchema,
        table: DescriptorTable | None = None,
        max_len: int = 256,
    ) -> "FeatureBuilder":
        vocab = build_vocab(
            reaction_tokens(record) for record in train_records
        )
        normalizer = fit_normalizer(
            [reaction_descriptor(record, table) for record in train_records]
        )
        logger.info(
            f"Features fitted on {len(train_records)} records: "
            f"vocabulary {len(vocab)}, descriptor width {len(normalizer)}"
        )
        return cls(schema, vocab, normalizer, max_len, table)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def descriptor_dim(self) -> int:
        return len(self.normalizer)

    @property
    def layout_id(self) -> str:
        return reaction_layout(self.table)

    def transform(self, records: Sequence[ReactionRecord]) -> FeatureBatch:
        n = len(records)
        ids = np.zeros((n, self.max_len), dtype=np.int64)
        mask = np.zeros((n, self.max_len), dtype=np.int64)
        descriptors = np.zeros((n, self.descriptor_dim))
        targets = np.zeros(n)

        for row, record in enumerate(records):
            encoded = encode(reaction_tokens(record), self.vocab, self.max_len)
            ids[row] = encoded.ids
            mask[row] = encoded.attention_mask
            vector = normalize(
                reaction_descriptor(record, self.table), self.normalizer
            )
            descriptors[row] = vector.values
            targets[row] = record.yield_fraction

        return FeatureBatch(
            ids=ids,
            attention_mask=mask,
            descriptors=descriptors,
            targets=targets,
        )

    def metadata(self) -> dict[str, Any]:
        """JSON-serializable state stored alongside model checkpoints"""
        return {
            "schema": self.schema.name,
            "vocab": self.vocab.tokens,
            "normalizer": {
                "mean": self.normalizer.mean.tolist(),
                "std": self.normalizer.std.tolist(),
            },
            "descriptor_layout": self.layout_id,
            "max_len": self.max_len,
        }

    @classmethod
    def from_metadata(
        cls, metadata: dict[str, Any], table: DescriptorTable | None = None
    ) -> "FeatureBuilder":
        """
        Rebuild a fitted builder from checkpoint metadata

        Raises:
            InconsistentWidthError: ``table`` has a different descriptor layout
                than the one the model was trained with
        """
        layout = metadata["descriptor_layout"]
        if reaction_layout(table) != layout:
            raise InconsistentWidthError(
                f"Descriptor layout {reaction_layout(table)} does not match "
                f"the checkpoint's layout {layout}"
            )
        normalizer = Normalizer(
            mean=np.asarray(metadata["normalizer"]["mean"], dtype=np.float64),
            std=np.asarray(metadata["normalizer"]["std"], dtype=np.float64),
        )
        return cls(
            schema=get_schema(metadata["schema"]),
            vocab=Vocab.from_tokens(metadata["vocab"]),
            normalizer=normalizer,
            max_len=int(metadata["max_len"]),
            table=table,
        )
