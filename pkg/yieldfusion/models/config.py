"""
Configuration Models
Pydantic models for model, training, split and run configuration.
"""

from pathlib import Path
from typing import Literal

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

Modality = Literal["multimodal", "smiles", "descriptors"]


def _split_int_list(value):
    """Accept '128,64' as well as [128, 64]"""
    if isinstance(value, str):
        return [int(part) for part in value.split(",") if part.strip()]
    return value


def _split_float_list(value):
    if isinstance(value, str):
        return [float(part) for part in value.split(",") if part.strip()]
    return value


class ModelConfig(BaseModel):
    """Architecture of the fusion model"""

    d_model: int = Field(64, gt=0, description="Encoder width")
    n_heads: int = Field(4, gt=0, description="Attention heads")
    n_layers: int = Field(2, gt=0, description="Encoder blocks")
    ff_dim: int = Field(128, gt=0, description="Feed-forward width")
    max_len: int = Field(256, ge=2, description="Encoded sequence length")
    vocab_size: int = Field(..., ge=3, description="Vocabulary size")
    mlp_hidden: list[int] = Field(
        default_factory=lambda: [128, 64], description="MLP hidden widths"
    )
    descriptor_dim: int = Field(..., gt=0, description="Descriptor width")
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    modality: Modality = Field(
        "multimodal", description="Input channels feeding the head"
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("mlp_hidden", mode="before")
    @classmethod
    def parse_mlp_hidden(cls, v):
        return _split_int_list(v)

    @field_validator("mlp_hidden")
    @classmethod
    def validate_mlp_hidden(cls, v):
        """At least one positive hidden width"""
        if not v or any(width <= 0 for width in v):
            raise ValueError("mlp_hidden needs positive widths")
        return v

    @property
    def fusion_dim(self) -> int:
        if self.modality == "smiles":
            return self.d_model
        if self.modality == "descriptors":
            return self.mlp_hidden[-1]
        return self.d_model + self.mlp_hidden[-1]

    @property
    def uses_smiles(self) -> bool:
        return self.modality in ("multimodal", "smiles")

    @property
    def uses_descriptors(self) -> bool:
        return self.modality in ("multimodal", "descriptors")


class TrainConfig(BaseModel):
    """Optimisation settings"""

    lr: float = Field(1e-3, ge=0.0, description="Adam learning rate")
    batch_size: int = Field(32, ge=1)
    epochs: int = Field(50, ge=1)
    seed: int = Field(..., description="Seed for init, shuffling, dropout")
    grad_clip: float = Field(1.0, gt=0.0, description="Global-norm clip")
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    max_steps: int | None = Field(
        None, ge=1, description="Stop after this many optimizer steps"
    )

    model_config = ConfigDict(frozen=True)


class SplitSpec(BaseModel):
    """How a dataset is divided for evaluation"""

    kind: Literal["random_fold", "out_of_sample"] = "random_fold"
    ratio: float = Field(0.7, gt=0.0, lt=1.0)
    n_folds: int = Field(10, ge=1)
    seed: int = 0
    group_role: str | None = None
    n_partitions: int = Field(4, ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_group_role(self):
        if self.kind == "out_of_sample" and self.group_role is None:
            raise ValueError("out_of_sample splits need a group_role")
        return self


class RunConfig(BaseModel):
    """Flat run configuration shared by every CLI command"""

    dataset: Path | None = Field(None, description="Dataset CSV")
    schema_name: str = Field(
        "buchwald_hartwig",
        validation_alias=AliasChoices("schema_name", "schema"),
        description="buchwald_hartwig or suzuki_miyaura",
    )
    descriptors: Path | None = Field(
        None, description="Descriptor table CSV (structural if absent)"
    )
    output_dir: Path = Field(Path("runs"), description="Report directory")
    seed: int = Field(..., description="Mandatory run seed")

    split_ratio: float = Field(0.7, gt=0.0, lt=1.0)
    n_folds: int = Field(10, ge=1)
    group_role: str | None = None
    n_partitions: int = Field(4, ge=1)

    d_model: int = Field(64, gt=0)
    n_heads: int = Field(4, gt=0)
    n_layers: int = Field(2, gt=0)
    ff_dim: int = Field(128, gt=0)
    max_len: int = Field(256, ge=2)
    mlp_hidden: list[int] = Field(default_factory=lambda: [128, 64])
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    modality: Modality = "multimodal"

    lr: float = Field(1e-3, ge=0.0)
    batch_size: int = Field(32, ge=1)
    epochs: int = Field(50, ge=1)
    grad_clip: float = Field(1.0, gt=0.0)
    max_steps: int | None = Field(None, ge=1)
    workers: int = Field(1, ge=1, description="Parallel fold evaluations")

    trials: int = Field(1000, ge=1, description="Random-baseline trials")
    k_percents: list[float] = Field(
        default_factory=lambda: [5.0, 10.0, 15.0, 30.0]
    )
    top_n: int = Field(1, ge=1, description="Suggestions averaged per pair")
    search_grid: str = Field(
        "", description="e.g. 'lr=1e-3,3e-4;d_model=32,64'"
    )
    log_level: str = "INFO"

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @field_validator("mlp_hidden", mode="before")
    @classmethod
    def parse_mlp_hidden(cls, v):
        return _split_int_list(v)

    @field_validator("k_percents", mode="before")
    @classmethod
    def parse_k_percents(cls, v):
        return _split_float_list(v)

    @field_validator("dataset", "descriptors", mode="before")
    @classmethod
    def empty_path_is_none(cls, v):
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @field_validator("max_steps", "group_role", mode="before")
    @classmethod
    def empty_value_is_none(cls, v):
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @model_validator(mode="after")
    def validate_paths(self):
        """Referenced input files must exist"""
        for name in ("dataset", "descriptors"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ValueError(f"{name} file not found: {path}")
        return self

    def build_model_config(
        self, vocab_size: int, descriptor_dim: int
    ) -> ModelConfig:
        return ModelConfig(
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            ff_dim=self.ff_dim,
            max_len=self.max_len,
            vocab_size=vocab_size,
            mlp_hidden=self.mlp_hidden,
            descriptor_dim=descriptor_dim,
            dropout_rate=self.dropout_rate,
            modality=self.modality,
        )

    def build_train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            grad_clip=self.grad_clip,
            dropout_rate=self.dropout_rate,
            max_steps=self.max_steps,
        )

    def build_split_spec(self, kind: str = "random_fold") -> SplitSpec:
        return SplitSpec(
            kind=kind,
            ratio=self.split_ratio,
            n_folds=self.n_folds,
            seed=self.seed,
            group_role=self.group_role,
            n_partitions=self.n_partitions,
        )
