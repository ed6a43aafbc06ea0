"""
Yield predictors used by evaluation and condition ranking
"""

from collections.abc import Callable, Sequence
from typing import Protocol

import numpy as np
from models.reaction import ReactionRecord

from .feature_service import FeatureBuilder
from .fusion_model import FusionModel, clamp_yield, predict_batch


class YieldPredictor(Protocol):
    def predict_raw(self, records: Sequence[ReactionRecord]) -> np.ndarray: ...

    def predict(self, records: Sequence[ReactionRecord]) -> np.ndarray: ...


class FusionPredictor:
    """Trained fusion model plus the features it was fitted with"""

    def __init__(self, model: FusionModel, features: FeatureBuilder):
        self.model = model
        self.features = features

    def predict_raw(self, records: Sequence[ReactionRecord]) -> np.ndarray:
        if not records:
            return np.zeros(0)
        batch = self.features.transform(records)
        return predict_batch(
            self.model, batch.ids, batch.attention_mask, batch.descriptors
        )

    def predict(self, records: Sequence[ReactionRecord]) -> np.ndarray:
        return clamp_yield(self.predict_raw(records))


class FunctionPredictor:
    """Predictor from a per-record function (oracles, constants, tests)"""

    def __init__(self, fn: Callable[[ReactionRecord], float]):
        self.fn = fn

    def predict_raw(self, records: Sequence[ReactionRecord]) -> np.ndarray:
        return np.array([self.fn(record) for record in records], dtype=float)

    def predict(self, records: Sequence[ReactionRecord]) -> np.ndarray:
        return clamp_yield(self.predict_raw(records))


def oracle_predictor() -> FunctionPredictor:
    """Predicts the measured yield"""
    return FunctionPredictor(lambda record: record.yield_fraction)


def constant_predictor(value: float) -> FunctionPredictor:
    return FunctionPredictor(lambda record: value)
