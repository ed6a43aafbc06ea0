"""
Unit tests for the synthetic HTE dataset generator
"""

import numpy as np
import pandas as pd
import pytest
from models.reaction import BUCHWALD_HARTWIG, SUZUKI_MIYAURA
from services.dataset_service import load_dataset
from services.descriptor_service import (
    STRUCTURAL_FEATURES,
    load_descriptor_table,
    missing_compounds,
)
from services.synthetic_service import generate_synthetic, write_synthetic

pytestmark = pytest.mark.unit


class TestGenerateSynthetic:
    """Test cases for generate_synthetic"""

    def test_full_grids(self, bh_synthetic, sm_synthetic):
        """Test every pool combination appears once"""
        assert len(bh_synthetic.dataset) == 7 * 4 * 3 * 5
        assert len(sm_synthetic.dataset) == 4 * 3 * 4 * 4 * 4
        combos = {r.smiles for r in bh_synthetic.dataset.records}
        assert len(combos) == 420

    def test_noiseless_yields_are_planted(self, bh_synthetic):
        """Test without noise the yields equal the planted values"""
        fractions = [r.yield_fraction for r in bh_synthetic.dataset.records]
        assert fractions == pytest.approx(
            bh_synthetic.planted.tolist(), abs=1e-6
        )
        assert np.all((bh_synthetic.planted > 0) & (bh_synthetic.planted < 1))

    def test_yields_vary(self, bh_synthetic):
        """Test the planted function is not flat"""
        assert np.std(bh_synthetic.planted) > 0.05

    def test_deterministic(self):
        """Test the seed fixes the dataset"""
        first = generate_synthetic(SUZUKI_MIYAURA, seed=1, noise=2.0)
        second = generate_synthetic(SUZUKI_MIYAURA, seed=1, noise=2.0)
        assert first.dataset.records == second.dataset.records

    def test_seed_changes_yields(self):
        """Test another seed plants another function"""
        first = generate_synthetic(BUCHWALD_HARTWIG, seed=1)
        second = generate_synthetic(BUCHWALD_HARTWIG, seed=2)
        assert not np.array_equal(first.planted, second.planted)

    def test_noise(self):
        """Test noise moves raw yields off the planted values"""
        noisy = generate_synthetic(BUCHWALD_HARTWIG, seed=7, noise=5.0)
        raw = np.array([r.raw_yield for r in noisy.dataset.records])
        assert not np.allclose(raw, 100.0 * noisy.planted, atol=1e-3)
        assert all(
            0.0 <= r.yield_fraction <= 1.0 for r in noisy.dataset.records
        )

    def test_negative_noise(self):
        """Test a negative noise level"""
        with pytest.raises(ValueError):
            generate_synthetic(BUCHWALD_HARTWIG, seed=0, noise=-1.0)

    def test_names(self, bh_synthetic):
        """Test pool-index display names; the empty additive has none"""
        first = bh_synthetic.dataset.records[0]
        assert first.names["ligand"] == "ligand 1"
        assert first.names["aryl_halide"] == "aryl halide 1"
        assert "additive" not in first.names
        assert first.display_name("additive") == "none"


class TestWriteSynthetic:
    """Test cases for write_synthetic"""

    def test_files_load_back(self, sm_files, sm_synthetic):
        """Test the dataset and descriptor table pass validation"""
        dataset_path, descriptors_path = sm_files
        dataset = load_dataset(dataset_path, SUZUKI_MIYAURA)
        table = load_descriptor_table(descriptors_path)

        assert len(dataset) == 768
        assert table.width == len(STRUCTURAL_FEATURES)
        assert missing_compounds(dataset.records, table) == []
        assert [r.names for r in dataset.records[:3]] == [
            r.names for r in sm_synthetic.dataset.records[:3]
        ]

    def test_dataset_columns(self, bh_dataset_csv):
        """Test SMILES and name columns in schema order"""
        frame = pd.read_csv(bh_dataset_csv)
        assert list(frame.columns) == [
            "aryl_halide_smiles",
            "ligand_smiles",
            "base_smiles",
            "additive_smiles",
            "aryl_halide_name",
            "ligand_name",
            "base_name",
            "additive_name",
            "yield",
        ]
