"""
Descriptor Exceptions
Errors raised while ingesting descriptor tables and building descriptor
vectors.
"""


class DescriptorError(Exception):
    """Base exception for descriptor operations"""

    pass


class MalformedDescriptorCsvError(DescriptorError):
    """Descriptor CSV cannot be read or lacks the smiles column"""

    pass


class InconsistentWidthError(DescriptorError):
    """Descriptor rows or vectors of different widths"""

    pass


class NonFiniteValueError(DescriptorError):
    """NaN or infinite descriptor value"""

    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(
            f"Non-finite descriptor value in row {row}, column '{column}'"
        )


class DuplicateKeyError(DescriptorError):
    """Same compound listed twice in a descriptor table"""

    pass


class MissingCompoundError(DescriptorError):
    """Reaction component absent from the descriptor table"""

    def __init__(self, compounds: list[str]):
        self.compounds = sorted(set(compounds))
        super().__init__(
            "Compounds missing from descriptor table: "
            + ", ".join(self.compounds)
        )


class EmptyInputError(DescriptorError):
    """Normalizer fitted on no vectors"""

    pass


class LengthMismatchError(DescriptorError):
    """Vector length differs from the normalizer layout"""

    pass
