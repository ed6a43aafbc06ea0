"""
Reaction Data Models
Pydantic models for HTE reaction records, dataset schemas and splits.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DatasetSchema(BaseModel):
    """Column layout and role groups of one HTE dataset"""

    name: str = Field(..., description="Schema identifier")
    roles: tuple[str, ...] = Field(
        ..., description="Component roles in column (schema) order"
    )
    condition_roles: tuple[str, ...] = Field(
        ..., description="Roles that form the tunable reaction conditions"
    )
    reactant_roles: tuple[str, ...] = Field(
        ..., description="Roles that identify the reactant pair"
    )
    yield_column: str = Field("yield", description="Measured yield column")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_roles(self):
        """Roles distinct; conditions and reactants partition the roles"""
        if len(set(self.roles)) != len(self.roles):
            raise ValueError(f"Duplicate roles in schema {self.name}")
        grouped = set(self.condition_roles) | set(self.reactant_roles)
        if grouped != set(self.roles) or set(self.condition_roles) & set(
            self.reactant_roles
        ):
            raise ValueError(
                f"Condition and reactant roles must partition {self.roles}"
            )
        return self

    def smiles_column(self, role: str) -> str:
        return f"{role}_smiles"

    def name_column(self, role: str) -> str:
        return f"{role}_name"

    @property
    def required_columns(self) -> list[str]:
        return [self.smiles_column(role) for role in self.roles] + [
            self.yield_column
        ]


BUCHWALD_HARTWIG = DatasetSchema(
    name="buchwald_hartwig",
    roles=("aryl_halide", "ligand", "base", "additive"),
    condition_roles=("ligand", "base", "additive"),
    reactant_roles=("aryl_halide",),
)

SUZUKI_MIYAURA = DatasetSchema(
    name="suzuki_miyaura",
    roles=("electrophile", "nucleophile", "ligand", "reagent", "solvent"),
    condition_roles=("ligand", "reagent", "solvent"),
    reactant_roles=("electrophile", "nucleophile"),
)

SCHEMAS = {
    schema.name: schema for schema in (BUCHWALD_HARTWIG, SUZUKI_MIYAURA)
}


class UnknownSchemaError(ValueError):
    """Schema name not among the built-in schemas"""

    pass


def get_schema(name: str) -> DatasetSchema:
    """Look up a schema by name"""
    try:
        return SCHEMAS[name]
    except KeyError as e:
        raise UnknownSchemaError(
            f"Unknown schema '{name}'. Use one of: {', '.join(SCHEMAS)}"
        ) from e


class ReactionRecord(BaseModel):
    """One HTE data point"""

    components: tuple[tuple[str, str], ...] = Field(
        ..., description="(role, SMILES) pairs in schema order"
    )
    yield_fraction: float = Field(
        ..., ge=0.0, le=1.0, description="Clamped yield as a fraction"
    )
    raw_yield: float = Field(..., description="Yield as read (0-100 scale)")
    names: dict[str, str] = Field(
        default_factory=dict, description="Optional display names by role"
    )

    model_config = ConfigDict(frozen=True)

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(role for role, _ in self.components)

    @property
    def smiles(self) -> tuple[str, ...]:
        return tuple(smiles for _, smiles in self.components)

    def smiles_for(self, role: str) -> str:
        for component_role, smiles in self.components:
            if component_role == role:
                return smiles
        raise KeyError(role)

    def project(self, roles: tuple[str, ...]) -> tuple[str, ...]:
        """SMILES of the given roles, in the given order"""
        return tuple(self.smiles_for(role) for role in roles)

    def display_name(self, role: str) -> str:
        """Display name when provided, otherwise the SMILES"""
        return self.names.get(role) or self.smiles_for(role) or "none"


class Split(BaseModel):
    """Train/test index sets into one dataset"""

    train_indices: tuple[int, ...] = Field(..., description="Training rows")
    test_indices: tuple[int, ...] = Field(..., description="Test rows")
    label: str = Field("", description="Human-readable split label")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_disjoint(self):
        """Train and test never share a row"""
        if set(self.train_indices) & set(self.test_indices):
            raise ValueError("Train and test indices overlap")
        return self
