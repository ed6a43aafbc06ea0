"""
Unit tests for feature fitting and transformation
"""

import json

import numpy as np
import pytest
from models.reaction import BUCHWALD_HARTWIG, SUZUKI_MIYAURA
from services.descriptor_exceptions import InconsistentWidthError
from services.descriptor_service import (
    STRUCTURAL_WIDTH,
    load_descriptor_table,
)
from services.feature_service import FeatureBuilder, reaction_tokens
from services.smiles_service import CLS_ID, PAD_ID, UNK_ID

pytestmark = pytest.mark.unit


@pytest.fixture(scope="module")
def chloride_records(bh_synthetic):
    """The 60 records of the first aryl halide"""
    return list(bh_synthetic.dataset.records[:60])


class TestFeatureBuilder:
    """Test cases for FeatureBuilder"""

    def test_shapes(self, chloride_records):
        """Test one row per record in both channels"""
        builder = FeatureBuilder.fit(chloride_records, BUCHWALD_HARTWIG)
        batch = builder.transform(chloride_records)

        assert builder.descriptor_dim == 4 * STRUCTURAL_WIDTH
        assert batch.ids.shape == (60, 256)
        assert batch.attention_mask.shape == (60, 256)
        assert batch.descriptors.shape == (60, builder.descriptor_dim)
        assert batch.targets.tolist() == [
            r.yield_fraction for r in chloride_records
        ]

    def test_sequences_start_with_cls(self, chloride_records):
        """Test [CLS] leads and padding follows the mask"""
        builder = FeatureBuilder.fit(chloride_records, BUCHWALD_HARTWIG)
        batch = builder.transform(chloride_records[:1])
        length = len(reaction_tokens(chloride_records[0])) + 1

        assert batch.ids[0, 0] == CLS_ID
        assert batch.attention_mask[0].sum() == length
        assert np.all(batch.ids[0, length:] == PAD_ID)

    def test_normalized_on_train(self, chloride_records):
        """Test the training descriptors have zero mean per dimension"""
        builder = FeatureBuilder.fit(chloride_records, BUCHWALD_HARTWIG)
        batch = builder.transform(chloride_records)
        assert np.allclose(batch.descriptors.mean(axis=0), 0.0, atol=1e-12)

    def test_unseen_tokens_map_to_unk(self, chloride_records, bh_synthetic):
        """Test an iodide never seen in training encodes as [UNK]"""
        builder = FeatureBuilder.fit(chloride_records, BUCHWALD_HARTWIG)
        iodide = next(
            r
            for r in bh_synthetic.dataset.records
            if r.smiles_for("aryl_halide") == "Ic1ccccn1"
        )
        batch = builder.transform([iodide])
        assert UNK_ID in batch.ids[0].tolist()

    def test_subset(self, chloride_records):
        """Test subsets keep the row alignment"""
        builder = FeatureBuilder.fit(chloride_records, BUCHWALD_HARTWIG)
        batch = builder.transform(chloride_records)
        part = batch.subset([3, 1])
        assert len(part) == 2
        assert np.array_equal(part.ids[0], batch.ids[3])
        assert part.targets.tolist() == [batch.targets[3], batch.targets[1]]

    def test_metadata_round_trip(self, chloride_records):
        """Test a rebuilt builder transforms identically"""
        builder = FeatureBuilder.fit(
            chloride_records, BUCHWALD_HARTWIG, max_len=200
        )
        metadata = json.loads(json.dumps(builder.metadata()))
        rebuilt = FeatureBuilder.from_metadata(metadata)

        original = builder.transform(chloride_records[:5])
        restored = rebuilt.transform(chloride_records[:5])
        assert rebuilt.max_len == 200
        assert np.array_equal(original.ids, restored.ids)
        assert np.array_equal(original.descriptors, restored.descriptors)

    def test_table_descriptors(self, sm_files, sm_synthetic):
        """Test a descriptor table sets the per-compound width"""
        _, descriptors_path = sm_files
        table = load_descriptor_table(descriptors_path)
        records = list(sm_synthetic.dataset.records[:40])
        builder = FeatureBuilder.fit(records, SUZUKI_MIYAURA, table)

        assert builder.descriptor_dim == 5 * table.width
        assert builder.layout_id == table.layout_id

    def test_layout_mismatch(self, sm_files, sm_synthetic):
        """Test a checkpoint's layout must match the given table"""
        _, descriptors_path = sm_files
        table = load_descriptor_table(descriptors_path)
        records = list(sm_synthetic.dataset.records[:40])
        structural = FeatureBuilder.fit(records, SUZUKI_MIYAURA)

        with pytest.raises(InconsistentWidthError):
            FeatureBuilder.from_metadata(structural.metadata(), table)
