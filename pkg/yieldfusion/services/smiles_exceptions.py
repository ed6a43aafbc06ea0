"""
SMILES Tokenization and Parsing Exceptions
Custom exceptions for the tokenizer, parser and sequence encoder.
"""


class SmilesError(Exception):
    """Base exception for SMILES operations"""

    pass


class UnclosedBracketError(SmilesError):
    """Bracket atom opened with '[' but never closed"""

    def __init__(self, smiles: str, position: int):
        self.smiles = smiles
        self.position = position
        super().__init__(
            f"Unclosed bracket atom at position {position} in '{smiles}'"
        )


class UnknownCharacterError(SmilesError):
    """Character outside the SMILES token grammar"""

    def __init__(self, smiles: str, position: int):
        self.smiles = smiles
        self.position = position
        self.character = smiles[position]
        super().__init__(
            f"Unknown character '{self.character}' at position {position} "
            f"in '{smiles}'"
        )


class UnbalancedBranchError(SmilesError):
    """Branch parentheses do not match"""

    pass


class UnmatchedRingClosureError(SmilesError):
    """Ring-closure label opened but never closed (or misplaced)"""

    pass


class DanglingBondError(SmilesError):
    """Bond symbol not followed by an atom or ring closure"""

    pass


class InvalidBracketAtomError(SmilesError):
    """Bracket token whose content is not an atom specification"""

    pass


class EmptyComponentListError(SmilesError):
    """Reaction assembled from zero components"""

    pass


class EmptyCorpusError(SmilesError):
    """Vocabulary requested for an empty corpus"""

    pass


class SequenceTooLongError(SmilesError):
    """Token sequence (plus CLS) does not fit the encoder length"""

    def __init__(self, length: int, max_len: int):
        self.length = length
        self.max_len = max_len
        super().__init__(
            f"Sequence of {length} tokens plus CLS exceeds max_len={max_len}"
        )
