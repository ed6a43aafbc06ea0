"""
Thread-safe run state for fold/split evaluations
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger(__name__)


@dataclass
class UnitState:
    """State of one evaluation unit (fold, split or search candidate)"""

    label: str
    status: str = "pending"
    result: dict[str, Any] | None = None
    error: str | None = None


@dataclass
class RunState:
    """Run-level state data structure"""

    command: str | None = None
    units: dict[int, UnitState] = field(default_factory=dict)


class RunStateManager:
    """
    Thread-safe progress tracker for parallel evaluations

    Workers call start_unit/finish_unit/fail_unit from their own threads;
    the orchestrating thread reads ordered results once all are done.
    """

    def __init__(self, command: str | None = None):
        self._lock = threading.RLock()  # Reentrant lock for nested calls
        self._state = RunState(command=command)

    def register(self, index: int, label: str) -> None:
        with self._lock:
            self._state.units[index] = UnitState(label=label)

    def start_unit(self, index: int) -> bool:
        """
        Mark a unit as running

        Returns:
            bool: False if the unit was already started
        """
        with self._lock:
            unit = self._state.units.setdefault(index, UnitState(str(index)))
            if unit.status != "pending":
                logger.warning(f"Unit {unit.label} already {unit.status}")
                return False
            unit.status = "running"
            logger.debug(f"Unit started: {unit.label}")
            return True

    def finish_unit(self, index: int, result: dict[str, Any]) -> None:
        with self._lock:
            unit = self._state.units[index]
            unit.status = "done"
            unit.result = result
            logger.debug(f"Unit finished: {unit.label}")

    def fail_unit(self, index: int, error: str) -> None:
        with self._lock:
            unit = self._state.units[index]
            unit.status = "failed"
            unit.error = error
            logger.warning(
                f"{self._state.command} unit failed: {unit.label}: {error}"
            )

    def counts(self) -> dict[str, int]:
        """Number of units per status"""
        with self._lock:
            tally: dict[str, int] = {}
            for unit in self._state.units.values():
                tally[unit.status] = tally.get(unit.status, 0) + 1
            return tally

    def ordered_results(self) -> list[dict[str, Any]]:
        """Results by unit index; every unit must be done"""
        with self._lock:
            pending = [
                unit.label
                for unit in self._state.units.values()
                if unit.status != "done"
            ]
            if pending:
                raise RuntimeError(f"Units not finished: {pending}")
            return [
                self._state.units[index].result
                for index in sorted(self._state.units)
            ]
