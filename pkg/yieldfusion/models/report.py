"""
Report Models
Pydantic models for evaluation metrics and condition-optimization results.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Metrics(BaseModel):
    """Test metrics of one split; RMSE on the 0-100 yield scale"""

    rmse: float = Field(..., ge=0.0, description="RMSE in yield points")
    r2: float = Field(..., le=1.0, description="Coefficient of determination")

    model_config = ConfigDict(frozen=True)


class AggregateMetrics(BaseModel):
    """Mean and population std of fold metrics"""

    rmse_mean: float
    rmse_std: float = Field(..., ge=0.0)
    r2_mean: float
    r2_std: float = Field(..., ge=0.0)
    n_folds: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True)

    @property
    def rmse_text(self) -> str:
        return f"{self.rmse_mean:.1f} ± {self.rmse_std:.1f}"

    @property
    def r2_text(self) -> str:
        return f"{self.r2_mean:.3f} ± {self.r2_std:.3f}"


class SplitResult(BaseModel):
    """Metrics of one fold / out-of-sample split"""

    label: str
    n_train: int
    n_test: int
    metrics: Metrics
    best_epoch: int | None = None

    model_config = ConfigDict(frozen=True)


class ConditionCombo(BaseModel):
    """One assignment of the schema's condition roles"""

    roles: tuple[str, ...]
    smiles: tuple[str, ...]
    names: tuple[str, ...] = ()

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_lengths(self):
        if len(self.roles) != len(self.smiles):
            raise ValueError("Each condition role needs exactly one SMILES")
        if self.names and len(self.names) != len(self.roles):
            raise ValueError("Display names must cover every role")
        return self

    @property
    def key(self) -> tuple[str, ...]:
        """Sort key of the combo (SMILES in role order)"""
        return self.smiles

    def display(self) -> tuple[str, ...]:
        if self.names:
            return tuple(
                name or smiles or "none"
                for name, smiles in zip(self.names, self.smiles, strict=True)
            )
        return tuple(smiles or "none" for smiles in self.smiles)


class Suggestion(BaseModel):
    """A ranked condition combination for one reactant pair"""

    combo: ConditionCombo
    estimated_yield: float = Field(..., ge=0.0, le=1.0)
    actual_yield: float | None = None

    model_config = ConfigDict(frozen=True)


class PairOutcome(BaseModel):
    """Benchmark outcome of one reactant pair"""

    pair: tuple[str, ...]
    pair_display: tuple[str, ...]
    n_combos: int
    best_reported_yield: float
    suggested_yield: float
    best_combo_rank: int = Field(..., ge=1, description="1-based rank")

    model_config = ConfigDict(frozen=True)


class OptimizationReport(BaseModel):
    """Condition-optimization benchmark summary"""

    scope: str = Field(..., description="'test split' or exploration label")
    top_n: int = 1
    pairs: list[PairOutcome]
    mean_best_reported: float
    mean_suggested: float
    fraction_of_optimal: float
    random_baseline: float
    random_baseline_expectation: float
    random_fraction_of_optimal: float
    topk_accuracy: dict[str, float]
    trials: int

    model_config = ConfigDict(frozen=True)
