"""
Synthetic Data Service
Combinatorial HTE-style datasets over small built-in compound pools with a
planted, noiseless yield function of structural descriptors.
"""

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from models.reaction import DatasetSchema, ReactionRecord
from utils.log_context import get_run_logger

from .dataset_service import ReactionDataset
from .descriptor_service import (
    STRUCTURAL_FEATURES,
    STRUCTURAL_WIDTH,
    structural_for_smiles,
)

logger = get_run_logger(__name__)

COMPOUND_POOLS: dict[str, dict[str, tuple[str, ...]]] = {
    "buchwald_hartwig": {
        "aryl_halide": (
            "Clc1ccccn1",
            "Brc1ccccn1",
            "Ic1ccccn1",
            "FC(F)(F)c1ccc(Cl)cc1",
            "FC(F)(F)c1ccc(Br)cc1",
            "COc1ccc(I)cc1",
            "CCc1ccc(Br)cc1",
        ),
        "ligand": (
            "CC(C)(C)P(c1ccccc1)C(C)(C)C",
            "c1ccc(P(c2ccccc2)c2ccccc2)cc1",
            "CC(C)c1cc(C(C)C)c(-c2ccccc2P(C2CCCCC2)C2CCCCC2)c(C(C)C)c1",
            "COc1cccc(OC)c1-c1ccccc1P(C1CCCCC1)C1CCCCC1",
        ),
        "base": (
            "CN(C)C(=NC(C)(C)C)N(C)C",
            "CCN=P(N=P(N(C)C)(N(C)C)N(C)C)(N(C)C)N(C)C",
            "CN1CCCN2CCCN=C12",
        ),
        "additive": (
            "",
            "Cc1ccon1",
            "c1ccc(-c2ccon2)cc1",
            "CCOC(=O)c1cc(C)on1",
            "Cc1cc(C)on1",
        ),
    },
    "suzuki_miyaura": {
        "electrophile": (
            "Clc1ccc2ncccc2c1",
            "Brc1ccc2ncccc2c1",
            "Ic1ccc2ncccc2c1",
            "O=S(=O)(Oc1ccc2ncccc2c1)C(F)(F)F",
        ),
        "nucleophile": (
            "Cc1ccc2c(cnn2C2CCCCO2)c1B(O)O",
            "Cc1ccc2c(cnn2C2CCCCO2)c1[B-](F)(F)F.[K+]",
            "Cc1ccc2c(cnn2C2CCCCO2)c1B1OC(C)(C)C(C)(C)O1",
        ),
        "ligand": (
            "",
            "CC(C)(C)P(C(C)(C)C)C(C)(C)C",
            "c1ccc(P(c2ccccc2)c2ccccc2)cc1",
            "CN(C)c1ccc(P(C(C)(C)C)C(C)(C)C)cc1",
        ),
        "reagent": (
            "[OH-].[Na+]",
            "[Li+].CC(C)(C)[O-]",
            "CCN(CC)CC",
            "[F-].[Cs+]",
        ),
        "solvent": ("CC#N", "C1CCOC1", "CN(C)C=O", "CO"),
    },
}

YIELD_SHARPNESS = 1.5
INTERACTION_WEIGHT = 0.5


@dataclass(frozen=True)
class SyntheticDataset:
    dataset: ReactionDataset
    planted: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        schema = self.dataset.schema
        rows = []
        for record in self.dataset.records:
            row = {}
            for role, smiles in record.components:
                row[schema.smiles_column(role)] = smiles
            for role in schema.roles:
                row[schema.name_column(role)] = record.names.get(role, "")
            row[schema.yield_column] = record.raw_yield
            rows.append(row)
        columns = [schema.smiles_column(role) for role in schema.roles]
        columns += [schema.name_column(role) for role in schema.roles]
        columns.append(schema.yield_column)
        return pd.DataFrame(rows, columns=columns)


def _compound_scores(
    schema: DatasetSchema, seed: int
) -> dict[tuple[str, str], float]:
    """Planted per-(role, compound) contribution to the yield logit"""
    pools = COMPOUND_POOLS[schema.name]
    compounds = sorted({s for pool in pools.values() for s in pool if s})
    matrix = np.stack([structural_for_smiles(s).values for s in compounds])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std[std == 0] = 1.0
    z = {
        s: (row - mean) / std
        for s, row in zip(compounds, matrix, strict=True)
    }

    rng = np.random.default_rng(seed)
    scores = {}
    for role in schema.roles:
        weights = rng.standard_normal(STRUCTURAL_WIDTH) / np.sqrt(
            STRUCTURAL_WIDTH
        )
        for smiles in pools[role]:
            scores[(role, smiles)] = (
                float(weights @ z[smiles]) if smiles else 0.0
            )
    return scores


def planted_yield(
    components: tuple[tuple[str, str], ...],
    schema: DatasetSchema,
    scores: dict[tuple[str, str], float],
) -> float:
    """Noiseless yield fraction of one combination"""
    logit = sum(scores[component] for component in components)
    by_role = dict(components)
    reactant_role = schema.reactant_roles[0]
    condition_role = schema.condition_roles[0]
    reactant = scores[(reactant_role, by_role[reactant_role])]
    condition = scores[(condition_role, by_role[condition_role])]
    logit += INTERACTION_WEIGHT * reactant * condition
    return float(1.0 / (1.0 + np.exp(-YIELD_SHARPNESS * logit)))


def generate_synthetic(
    schema: DatasetSchema, seed: int, noise: float = 0.0
) -> SyntheticDataset:
    """
    Every combination of the schema's compound pools, one row each

    ``noise`` is the std of Gaussian noise added to the 0-100 yield; the
    planted (noiseless) fractions are returned alongside.
    """
    if schema.name not in COMPOUND_POOLS:
        raise ValueError(f"No compound pools for schema '{schema.name}'")
    if noise < 0:
        raise ValueError(f"noise must be non-negative: {noise}")

    pools = COMPOUND_POOLS[schema.name]
    scores = _compound_scores(schema, seed)
    noise_rng = np.random.default_rng([seed, 1])

    records = []
    planted = []
    for combo in itertools.product(*(pools[role] for role in schema.roles)):
        components = tuple(zip(schema.roles, combo, strict=True))
        fraction = planted_yield(components, schema, scores)
        raw = round(100.0 * fraction + noise * noise_rng.standard_normal(), 4)
        names = {
            role: f"{role.replace('_', ' ')} {pools[role].index(smiles) + 1}"
            for role, smiles in components
            if smiles
        }
        records.append(
            ReactionRecord(
                components=components,
                yield_fraction=min(1.0, max(0.0, raw / 100.0)),
                raw_yield=raw,
                names=names,
            )
        )
        planted.append(fraction)

    dataset = ReactionDataset(
        schema=schema,
        records=tuple(records),
        clamped_rows=sum(not 0.0 <= r.raw_yield <= 100.0 for r in records),
        source=f"synthetic:{schema.name}:{seed}",
    )
    logger.info(f"Synthesized {len(records)} {schema.name} records")
    return SyntheticDataset(dataset=dataset, planted=np.asarray(planted))


def write_synthetic(
    synthetic: SyntheticDataset,
    dataset_path: str | Path,
    descriptors_path: str | Path | None = None,
) -> None:
    """Dataset CSV plus, optionally, a structural descriptor table CSV"""
    dataset_path = Path(dataset_path)
    dataset_path.parent.mkdir(parents=True, exist_ok=True)
    synthetic.to_frame().to_csv(dataset_path, index=False)

    if descriptors_path is not None:
        compounds = sorted(
            {s for r in synthetic.dataset.records for s in r.smiles if s}
        )
        table = pd.DataFrame(
            [structural_for_smiles(s).values for s in compounds],
            columns=list(STRUCTURAL_FEATURES),
        )
        table.insert(0, "smiles", compounds)
        Path(descriptors_path).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(descriptors_path, index=False)
