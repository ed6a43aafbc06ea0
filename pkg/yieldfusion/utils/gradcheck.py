"""
Finite-difference gradient check for tape-differentiated functions
"""

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from utils.tensor import (
    NondeterministicFunctionError,
    Parameter,
    Tape,
    Tensor,
    backward,
)

RELATIVE_ERROR_FLOOR = 1e-8
DEFAULT_STEP = 1e-5


@dataclass(frozen=True)
class Coordinate:
    parameter: str
    index: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.parameter}{list(self.index)}"


@dataclass(frozen=True)
class CoordinateCheck:
    coordinate: Coordinate
    analytic: float
    numeric: float
    relative_error: float


@dataclass
class GradCheckResult:
    checks: list[CoordinateCheck] = field(default_factory=list)

    @property
    def max_relative_error(self) -> float:
        return max(
            (check.relative_error for check in self.checks), default=0.0
        )

    @property
    def worst(self) -> CoordinateCheck | None:
        if not self.checks:
            return None
        return max(self.checks, key=lambda check: check.relative_error)

    def passed(self, tolerance: float) -> bool:
        return self.max_relative_error < tolerance

    def groups(self) -> list[str]:
        return sorted({check.coordinate.parameter for check in self.checks})


def relative_error(analytic: float, numeric: float) -> float:
    denominator = max(RELATIVE_ERROR_FLOOR, abs(analytic) + abs(numeric))
    return abs(analytic - numeric) / denominator


def sample_coordinates(
    parameters: Mapping[str, Parameter], n: int, seed: int
) -> list[Coordinate]:
    """
    ``n`` coordinates drawn round-robin over the parameters (sorted by
    name), so every group is covered once n >= len(parameters)
    """
    rng = np.random.default_rng(seed)
    names = sorted(parameters)
    if not names or n <= 0:
        return []
    coordinates = []
    for i in range(n):
        name = names[i % len(names)]
        shape = parameters[name].shape
        flat = int(rng.integers(0, max(int(np.prod(shape)), 1)))
        index = tuple(int(j) for j in np.unravel_index(flat, shape))
        coordinates.append(Coordinate(parameter=name, index=index))
    return coordinates


def grad_check(
    loss_fn: Callable[[], Tensor],
    parameters: Mapping[str, Parameter],
    coordinates: list[Coordinate],
    h: float = DEFAULT_STEP,
) -> GradCheckResult:
    """
    Compare tape gradients against central differences

    ``loss_fn`` must build the scalar loss from ``parameters`` and be
    deterministic (dropout off). Parameters are restored after each probe.

    Raises:
        NondeterministicFunctionError: two evaluations at the base point differ
        ValueError: h is not positive
    """
    if h <= 0:
        raise ValueError(f"step must be positive: {h}")

    tape = Tape()
    with tape.recording():
        loss = loss_fn()
    gradients = backward(loss, parameters.values())

    def evaluate() -> float:
        return loss_fn().item()

    first, second = evaluate(), evaluate()
    if first != second:
        raise NondeterministicFunctionError(
            f"Loss evaluated twice gave {first!r} and {second!r}"
        )

    result = GradCheckResult()
    for coordinate in coordinates:
        data = parameters[coordinate.parameter].data
        original = data[coordinate.index]
        try:
            data[coordinate.index] = original + h
            plus = evaluate()
            data[coordinate.index] = original - h
            minus = evaluate()
        finally:
            data[coordinate.index] = original

        numeric = (plus - minus) / (2.0 * h)
        analytic = float(gradients[coordinate.parameter][coordinate.index])
        result.checks.append(
            CoordinateCheck(
                coordinate=coordinate,
                analytic=analytic,
                numeric=numeric,
                relative_error=relative_error(analytic, numeric),
            )
        )
    return result
