"""
Report Service
Writes JSON and markdown reports with content-stable names and renders the
metrics / out-of-sample / suggestion / benchmark tables.
"""

import json
import os
import tempfile
import threading
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import pandas as pd
from models.report import (
    AggregateMetrics,
    OptimizationReport,
    SplitResult,
    Suggestion,
)
from utils.log_context import get_run_logger

logger = get_run_logger(__name__)


def _pretty(text: str) -> str:
    return text.replace("_", " ").title()


class ReportWriter:
    """
    Serialized report writes into one output directory

    Inside ``transaction()`` every file written (or registered with
    ``track``) is removed again if the block raises.
    """

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)
        self._lock = threading.Lock()
        self._written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def track(self, path: Path) -> Path:
        with self._lock:
            self._written.append(Path(path))
        return Path(path)

    def _write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        with self._lock:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(
                dir=self.output_dir, prefix=f".{name}.", suffix=".tmp"
            )
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                    f.write(text)
                os.replace(tmp_name, target)
            except BaseException:
                Path(tmp_name).unlink(missing_ok=True)
                raise
            self._written.append(target)
        logger.info(f"Report written: {target}")
        return target

    def write_json(self, name: str, payload: Any) -> Path:
        text = json.dumps(
            payload, sort_keys=True, indent=2, ensure_ascii=False
        )
        return self._write_text(name, text + "\n")

    def write_markdown(self, name: str, text: str) -> Path:
        return self._write_text(name, text.rstrip("\n") + "\n")

    def discard(self) -> None:
        with self._lock:
            for path in reversed(self._written):
                path.unlink(missing_ok=True)
            removed = len(self._written)
            self._written.clear()
        if removed:
            logger.warning(f"Removed {removed} partial output files")

    @contextmanager
    def transaction(self) -> Iterator["ReportWriter"]:
        try:
            yield self
        except BaseException:
            self.discard()
            raise


def _table(frame: pd.DataFrame) -> str:
    return frame.to_markdown(index=False, disable_numparse=True)


def metrics_payload(
    results: Sequence[SplitResult], aggregate: AggregateMetrics
) -> dict[str, Any]:
    return {
        "splits": [result.model_dump(mode="json") for result in results],
        "aggregate": {
            **aggregate.model_dump(mode="json"),
            "rmse": aggregate.rmse_text,
            "r2": aggregate.r2_text,
        },
    }


def metrics_markdown(
    title: str, results: Sequence[SplitResult], aggregate: AggregateMetrics
) -> str:
    """Per-split rows plus the 'mean ± std' line"""
    rows = [
        {
            "Split": r.label,
            "Train": str(r.n_train),
            "Test": str(r.n_test),
            "R²": f"{r.metrics.r2:.3f}",
            "RMSE": f"{r.metrics.rmse:.1f}",
        }
        for r in results
    ]
    rows.append(
        {
            "Split": f"Mean ± std ({aggregate.n_folds})",
            "Train": "",
            "Test": "",
            "R²": aggregate.r2_text,
            "RMSE": aggregate.rmse_text,
        }
    )
    return f"## {title}\n\n{_table(pd.DataFrame(rows))}\n"


def oos_markdown(
    title: str, results: Sequence[SplitResult], aggregate: AggregateMetrics
) -> str:
    """One row: R² of Test 1..n, average R², average RMSE"""
    row = {
        f"Test {i}": f"{r.metrics.r2:.3f}"
        for i, r in enumerate(results, 1)
    }
    row["Average R²"] = f"{aggregate.r2_mean:.3f}"
    row["Average RMSE"] = f"{aggregate.rmse_mean:.1f}"
    labels = "\n".join(
        f"- Test {i}: {r.label}" for i, r in enumerate(results, 1)
    )
    return f"## {title}\n\n{_table(pd.DataFrame([row]))}\n\n{labels}\n"


def _yield(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def suggestions_markdown(
    title: str, suggestions: Sequence[Suggestion]
) -> str:
    """Ranked conditions with estimated and actual yields"""
    rows = []
    for rank, suggestion in enumerate(suggestions, 1):
        row = {"Rank": str(rank)}
        for role, shown in zip(
            suggestion.combo.roles, suggestion.combo.display(), strict=True
        ):
            row[_pretty(role)] = shown
        row["Estimated Yield"] = _yield(suggestion.estimated_yield)
        row["Actual Yield"] = _yield(suggestion.actual_yield)
        rows.append(row)
    return f"## {title}\n\n{_table(pd.DataFrame(rows))}\n"


def optimization_markdown(
    report: OptimizationReport, reactant_roles: Sequence[str]
) -> str:
    """Per-pair yields, summary and the top-k accuracy table"""
    pair_rows = []
    for outcome in report.pairs:
        row = {
            _pretty(role): shown
            for role, shown in zip(
                reactant_roles, outcome.pair_display, strict=True
            )
        }
        row["Combos"] = str(outcome.n_combos)
        row["Best Reported"] = _yield(outcome.best_reported_yield)
        row["Suggested"] = _yield(outcome.suggested_yield)
        row["Rank of Best"] = str(outcome.best_combo_rank)
        pair_rows.append(row)

    quantities = {
        "Mean best reported yield": report.mean_best_reported,
        f"Mean suggested yield (top {report.top_n})": report.mean_suggested,
        "Fraction of optimal": report.fraction_of_optimal,
        f"Random baseline ({report.trials} trials)": report.random_baseline,
        "Random baseline fraction of optimal": (
            report.random_fraction_of_optimal
        ),
    }
    summary = pd.DataFrame(
        [
            {"Quantity": quantity, "Value": _yield(value)}
            for quantity, value in quantities.items()
        ]
    )
    accuracy = pd.DataFrame(
        [
            {"Top-k%": f"{k}%", "Accuracy": f"{value:.1f}"}
            for k, value in report.topk_accuracy.items()
        ]
    )
    return (
        f"## Condition optimization ({report.scope})\n\n"
        f"{_table(pd.DataFrame(pair_rows))}\n\n"
        f"{_table(summary)}\n\n"
        f"### Top-k accuracy\n\n{_table(accuracy)}\n"
    )
