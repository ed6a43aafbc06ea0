"""
Condition Service
Ranks condition combinations per reactant pair by predicted yield and
scores the ranking against measured yields (fraction of optimal, random
baseline, top-k% accuracy).
"""

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from models.reaction import DatasetSchema, ReactionRecord
from models.report import (
    ConditionCombo,
    OptimizationReport,
    PairOutcome,
    Suggestion,
)
from utils.log_context import get_run_logger

from .evaluation_exceptions import (
    BadKError,
    DuplicateConditionError,
    EmptyMetricInputError,
    MetricLengthMismatchError,
    UnknownPairError,
    ZeroOptimalError,
)
from .predictor import YieldPredictor

logger = get_run_logger(__name__)

DEFAULT_K_PERCENTS = (5.0, 10.0, 15.0, 30.0)


@dataclass(frozen=True)
class ConditionEntry:
    combo: ConditionCombo
    actual_yield: float | None
    record: ReactionRecord


def combo_of(record: ReactionRecord, schema: DatasetSchema) -> ConditionCombo:
    roles = schema.condition_roles
    return ConditionCombo(
        roles=roles,
        smiles=record.project(roles),
        names=tuple(record.names.get(role, "") for role in roles),
    )


def reactant_pairs(
    records: Sequence[ReactionRecord], schema: DatasetSchema
) -> list[tuple[str, ...]]:
    """Sorted distinct reactant assignments"""
    return sorted({r.project(schema.reactant_roles) for r in records})


def pair_display(
    records: Sequence[ReactionRecord],
    schema: DatasetSchema,
    pair: tuple[str, ...],
) -> tuple[str, ...]:
    for record in records:
        if record.project(schema.reactant_roles) == pair:
            return tuple(
                record.display_name(role) for role in schema.reactant_roles
            )
    return pair


def enumerate_conditions(
    records: Sequence[ReactionRecord],
    schema: DatasetSchema,
    pair: tuple[str, ...],
) -> list[ConditionEntry]:
    """
    Measured condition combinations of one reactant pair, sorted by combo

    Raises:
        UnknownPairError: pair not in the records
        DuplicateConditionError: a combo measured twice for the pair
    """
    pair = tuple(pair)
    entries: dict[tuple[str, ...], ConditionEntry] = {}
    for record in records:
        if record.project(schema.reactant_roles) != pair:
            continue
        combo = combo_of(record, schema)
        if combo.key in entries:
            raise DuplicateConditionError(combo.key)
        entries[combo.key] = ConditionEntry(
            combo=combo, actual_yield=record.yield_fraction, record=record
        )
    if not entries:
        raise UnknownPairError(pair)
    return [entries[key] for key in sorted(entries)]


def candidate_conditions(
    records: Sequence[ReactionRecord],
    schema: DatasetSchema,
    pair: tuple[str, ...],
) -> list[ConditionEntry]:
    """
    Every combination of condition values seen in the records for a pair;
    measured combos carry their actual yield

    Raises:
        UnknownPairError: pair not in the records
    """
    measured = {
        entry.combo.key: entry
        for entry in enumerate_conditions(records, schema, pair)
    }
    values: dict[str, dict[str, str]] = {
        role: {} for role in schema.condition_roles
    }
    for record in records:
        for role in schema.condition_roles:
            smiles = record.smiles_for(role)
            name = record.names.get(role, "")
            if smiles not in values[role] or name:
                values[role][smiles] = name

    reactants = dict(zip(schema.reactant_roles, pair, strict=True))
    entries = []
    for combo_smiles in itertools.product(
        *(sorted(values[role]) for role in schema.condition_roles)
    ):
        if combo_smiles in measured:
            entries.append(measured[combo_smiles])
            continue
        assignment = dict(
            zip(schema.condition_roles, combo_smiles, strict=True)
        )
        assignment.update(reactants)
        combo = ConditionCombo(
            roles=schema.condition_roles,
            smiles=combo_smiles,
            names=tuple(
                values[role][smiles]
                for role, smiles in zip(
                    schema.condition_roles, combo_smiles, strict=True
                )
            ),
        )
        record = ReactionRecord(
            components=tuple(
                (role, assignment[role]) for role in schema.roles
            ),
            yield_fraction=0.0,
            raw_yield=0.0,
        )
        entries.append(
            ConditionEntry(combo=combo, actual_yield=None, record=record)
        )
    return entries


def rank_conditions(
    predictor: YieldPredictor, entries: Sequence[ConditionEntry]
) -> list[Suggestion]:
    """
    Suggestions by clamped estimated yield, highest first

    The sort is stable, so ties keep the input (combo) order.
    """
    if not entries:
        return []
    estimates = predictor.predict([entry.record for entry in entries])
    suggestions = [
        Suggestion(
            combo=entry.combo,
            estimated_yield=float(estimate),
            actual_yield=entry.actual_yield,
        )
        for entry, estimate in zip(entries, estimates, strict=True)
    ]
    return sorted(suggestions, key=lambda s: -s.estimated_yield)


def best_reported(entries: Sequence[ConditionEntry]) -> ConditionEntry:
    """Highest measured yield; ties go to the first combo in sort order"""
    measured = [entry for entry in entries if entry.actual_yield is not None]
    if not measured:
        raise EmptyMetricInputError("No measured combinations")
    return max(measured, key=lambda entry: entry.actual_yield)


def suggested_yield(ranked: Sequence[Suggestion], top_n: int = 1) -> float:
    """Mean measured yield of the top ``top_n`` suggestions"""
    if top_n < 1:
        raise ValueError(f"top_n must be positive: {top_n}")
    top = [
        s.actual_yield for s in ranked[:top_n] if s.actual_yield is not None
    ]
    if not top:
        raise EmptyMetricInputError("No measured yield among top suggestions")
    return float(np.mean(top))


def fraction_of_optimal(
    best: Sequence[float], suggested: Sequence[float]
) -> float:
    """mean(suggested actual) / mean(best reported)"""
    if len(best) != len(suggested):
        raise MetricLengthMismatchError(
            f"{len(best)} best yields vs {len(suggested)} suggested"
        )
    if not best:
        raise EmptyMetricInputError("No reactant pairs")
    mean_best = math.fsum(best) / len(best)
    if mean_best == 0.0:
        raise ZeroOptimalError("Mean best reported yield is zero")
    return (math.fsum(suggested) / len(suggested)) / mean_best


def random_baseline(
    pair_yields: Sequence[Sequence[float]], trials: int, seed: int
) -> float:
    """
    Mean yield of one uniformly random combo per pair, averaged over
    pairs and then over ``trials`` seeded repetitions
    """
    if trials < 1:
        raise EmptyMetricInputError(f"trials must be positive: {trials}")
    if not pair_yields or any(len(y) == 0 for y in pair_yields):
        raise EmptyMetricInputError("Random baseline over no combinations")
    rng = np.random.default_rng(seed)
    per_trial = np.zeros(trials)
    for yields in pair_yields:
        values = np.asarray(yields, dtype=np.float64)
        per_trial += values[rng.integers(0, len(values), size=trials)]
    per_trial /= len(pair_yields)
    return float(per_trial.mean())


def random_baseline_expectation(
    pair_yields: Sequence[Sequence[float]],
) -> float:
    """Closed-form expectation of ``random_baseline``"""
    if not pair_yields or any(len(y) == 0 for y in pair_yields):
        raise EmptyMetricInputError("Random baseline over no combinations")
    return float(np.mean([np.mean(yields) for yields in pair_yields]))


def topk_window(k_percent: float, n_combos: int) -> int:
    """ceil(k% of n), never below 1"""
    if not 0.0 < k_percent <= 100.0:
        raise BadKError(f"k must be in (0, 100]: {k_percent}")
    return max(1, math.ceil(k_percent * n_combos / 100.0))


def topk_accuracy(
    ranked: Sequence[Sequence[Suggestion]],
    best_combos: Sequence[ConditionCombo],
    k_percents: Sequence[float] = DEFAULT_K_PERCENTS,
) -> dict[float, float]:
    """
    Percent of pairs whose best reported combo is within the top
    ceil(k% * n_combos) suggestions, per k

    Raises:
        EmptyMetricInputError: no pairs or no k values
        BadKError: k outside (0, 100]
    """
    if not ranked or not k_percents:
        raise EmptyMetricInputError("Top-k accuracy over no pairs")
    if len(ranked) != len(best_combos):
        raise MetricLengthMismatchError(
            f"{len(ranked)} rankings vs {len(best_combos)} best combos"
        )
    ranks = [
        next(
            i for i, s in enumerate(suggestions, 1) if s.combo.key == best.key
        )
        for suggestions, best in zip(ranked, best_combos, strict=True)
    ]
    accuracy = {}
    for k in k_percents:
        hits = sum(
            rank <= topk_window(k, len(suggestions))
            for rank, suggestions in zip(ranks, ranked, strict=True)
        )
        accuracy[float(k)] = 100.0 * hits / len(ranked)
    return accuracy


def benchmark_conditions(
    predictor: YieldPredictor,
    records: Sequence[ReactionRecord],
    schema: DatasetSchema,
    *,
    scope: str,
    k_percents: Sequence[float] = DEFAULT_K_PERCENTS,
    trials: int = 1000,
    seed: int = 0,
    top_n: int = 1,
) -> tuple[OptimizationReport, dict[tuple[str, ...], list[Suggestion]]]:
    """
    Rank the measured combos of every reactant pair in ``records`` and
    summarize the ranking against the measured optimum
    """
    pairs = reactant_pairs(records, schema)
    if not pairs:
        raise EmptyMetricInputError("No reactant pairs to benchmark")

    outcomes: list[PairOutcome] = []
    rankings: dict[tuple[str, ...], list[Suggestion]] = {}
    best_combos: list[ConditionCombo] = []
    pair_yields: list[list[float]] = []

    for pair in pairs:
        entries = enumerate_conditions(records, schema, pair)
        ranked = rank_conditions(predictor, entries)
        best = best_reported(entries)
        rank = next(
            i for i, s in enumerate(ranked, 1) if s.combo.key == best.combo.key
        )
        rankings[pair] = ranked
        best_combos.append(best.combo)
        pair_yields.append([entry.actual_yield for entry in entries])
        outcomes.append(
            PairOutcome(
                pair=pair,
                pair_display=pair_display(records, schema, pair),
                n_combos=len(entries),
                best_reported_yield=best.actual_yield,
                suggested_yield=suggested_yield(ranked, top_n),
                best_combo_rank=rank,
            )
        )

    best_yields = [o.best_reported_yield for o in outcomes]
    suggested = [o.suggested_yield for o in outcomes]
    baseline = random_baseline(pair_yields, trials, seed)
    mean_best = math.fsum(best_yields) / len(best_yields)
    accuracy = topk_accuracy(list(rankings.values()), best_combos, k_percents)

    report = OptimizationReport(
        scope=scope,
        top_n=top_n,
        pairs=outcomes,
        mean_best_reported=mean_best,
        mean_suggested=math.fsum(suggested) / len(suggested),
        fraction_of_optimal=fraction_of_optimal(best_yields, suggested),
        random_baseline=baseline,
        random_baseline_expectation=random_baseline_expectation(pair_yields),
        random_fraction_of_optimal=baseline / mean_best,
        topk_accuracy={f"{k:g}": v for k, v in accuracy.items()},
        trials=trials,
    )
    logger.info(
        f"Condition benchmark ({scope}): {len(pairs)} pairs, fraction of "
        f"optimal {report.fraction_of_optimal:.3f}, random baseline "
        f"{baseline:.3f}"
    )
    return report, rankings
