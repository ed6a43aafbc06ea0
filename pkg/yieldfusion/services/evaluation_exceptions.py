"""
Evaluation and Condition-Optimization Exceptions
"""


class EvaluationError(Exception):
    """Base exception for metrics and condition benchmarks"""

    pass


class MetricLengthMismatchError(EvaluationError):
    """Prediction and target vectors of different lengths"""

    pass


class EmptyMetricInputError(EvaluationError):
    """Metric or aggregate over no values"""

    pass


class DegenerateActualError(EvaluationError):
    """R² undefined because the targets have zero variance"""

    pass


class UnknownPairError(EvaluationError):
    """Reactant pair not present in the dataset"""

    def __init__(self, pair: tuple[str, ...]):
        self.pair = pair
        super().__init__(f"Unknown reactant pair: {' + '.join(pair)}")


class DuplicateConditionError(EvaluationError):
    """Same condition combination measured twice for one pair"""

    def __init__(self, combo: tuple[str, ...]):
        self.combo = combo
        super().__init__(f"Duplicate condition combination: {combo}")


class ZeroOptimalError(EvaluationError):
    """Mean best reported yield is zero"""

    pass


class BadKError(EvaluationError):
    """Top-k percentage outside (0, 100]"""

    pass
