"""
Dataset and Split Exceptions
Custom exceptions for HTE dataset ingestion and split construction.
"""


class DatasetError(Exception):
    """Base exception for dataset operations"""

    pass


class MalformedCsvError(DatasetError):
    """Dataset CSV cannot be parsed"""

    pass


class MissingColumnError(DatasetError):
    """Required schema column absent from the header"""

    def __init__(self, column: str, path: str):
        self.column = column
        self.path = path
        super().__init__(f"Missing column '{column}' in {path}")


class UnparseableYieldError(DatasetError):
    """Yield cell that is not a finite number"""

    def __init__(self, row: int, value: str):
        self.row = row
        self.value = value
        super().__init__(f"Unparseable yield '{value}' in data row {row}")


class SplitError(DatasetError):
    """Base exception for split construction"""

    pass


class InvalidRatioError(SplitError):
    """Train ratio outside (0, 1) or leaving one side empty"""

    pass


class TooSmallError(SplitError):
    """Not enough rows to carve out a holdout"""

    pass


class TooFewGroupsError(SplitError):
    """Fewer distinct group values than requested partitions"""

    pass


class TooFewPartitionsError(SplitError):
    """Group split requested with fewer than two partitions"""

    pass


class EmptySplitError(SplitError):
    """Predefined split file without data rows"""

    pass
