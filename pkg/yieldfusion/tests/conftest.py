"""
Pytest configuration and shared fixtures
"""

import os
import sys
from pathlib import Path

import pytest
from typer.testing import CliRunner

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.config import RunConfig
from models.reaction import BUCHWALD_HARTWIG, SUZUKI_MIYAURA
from services.synthetic_service import generate_synthetic, write_synthetic

# Small model so CLI and service tests train in seconds
TINY_RUN = {
    "d_model": "8",
    "n_heads": "2",
    "n_layers": "1",
    "ff_dim": "16",
    "mlp_hidden": "8",
    "dropout_rate": "0.0",
    "epochs": "2",
    "batch_size": "64",
    "lr": "0.003",
}


@pytest.fixture(scope="session")
def bh_synthetic():
    """Full synthetic Buchwald-Hartwig grid (420 records)"""
    return generate_synthetic(BUCHWALD_HARTWIG, seed=7)


@pytest.fixture(scope="session")
def sm_synthetic():
    """Full synthetic Suzuki-Miyaura grid (768 records)"""
    return generate_synthetic(SUZUKI_MIYAURA, seed=7)


@pytest.fixture
def bh_dataset_csv(tmp_path: Path, bh_synthetic) -> Path:
    path = tmp_path / "bh.csv"
    write_synthetic(bh_synthetic, path)
    return path


@pytest.fixture
def sm_files(tmp_path: Path, sm_synthetic) -> tuple[Path, Path]:
    """Suzuki-Miyaura dataset CSV and its structural descriptor table"""
    dataset = tmp_path / "sm.csv"
    descriptors = tmp_path / "sm_descriptors.csv"
    write_synthetic(sm_synthetic, dataset, descriptors)
    return dataset, descriptors


@pytest.fixture
def tiny_run_config(tmp_path: Path):
    """Build a tiny RunConfig for a dataset path"""

    def build(dataset: Path | None = None, **overrides) -> RunConfig:
        values = {
            **TINY_RUN,
            "seed": 3,
            "output_dir": str(tmp_path / "runs"),
            **overrides,
        }
        if dataset is not None:
            values["dataset"] = str(dataset)
        return RunConfig.model_validate(values)

    return build


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    """key=value run configuration with the tiny model settings"""
    path = tmp_path / "run.conf"
    lines = [f"{key}={value}" for key, value in TINY_RUN.items()]
    lines.append("seed=3")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()
