"""Ground-truth ranks, similarity-weighted rank aggregation, and the two
ranking baselines (designated-benchmark order and mean source rank).

Ranks are 1 = best; tied accuracies receive the average of the positions
they span, so each task's ranks always sum to M(M+1)/2. Predicted scores
are convex combinations of source ranks; the final ordering sorts scores
ascending with a lexicographic model-id tiebreak so output never depends
on dict insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergence import SimilarityDistribution
from .errors import InsufficientDataError, ParameterError, ShapeError, ValidationError


@dataclass(frozen=True)
class AccuracyTable:
    """Model-by-task matrix of benchmark scores in [0, 1]."""

    models: tuple[str, ...]
    tasks: tuple[str, ...]
    acc: np.ndarray  # (len(models), len(tasks))

    def __post_init__(self):
        acc = np.asarray(self.acc, dtype=float)
        if acc.shape != (len(self.models), len(self.tasks)):
            raise ShapeError(
                f"accuracy matrix shape {acc.shape} does not match "
                f"{len(self.models)} models x {len(self.tasks)} tasks"
            )
        if len(set(self.models)) != len(self.models):
            raise ValidationError("duplicate model ids")
        if len(set(self.tasks)) != len(self.tasks):
            raise ValidationError("duplicate task ids")
        if not np.all(np.isfinite(acc)):
            raise ValidationError("accuracy values must be finite")
        if np.any(acc < 0) or np.any(acc > 1):
            raise ValidationError("accuracy values must lie in [0, 1]")
        object.__setattr__(self, "acc", acc)
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "tasks", tuple(self.tasks))

    def column(self, task_id: str) -> dict[str, float]:
        if task_id not in self.tasks:
            raise KeyError(f"unknown task {task_id!r}")
        j = self.tasks.index(task_id)
        return {m: float(self.acc[i, j]) for i, m in enumerate(self.models)}


@dataclass(frozen=True)
class PredictedRanking:
    """Scores (smaller is better) and the induced model order."""

    target_id: str
    scores: dict[str, float]
    order: tuple[str, ...]


def average_ranks(values: dict[str, float], descending: bool = True) -> dict[str, float]:
    """Tie-averaged ranks of ``values`` (1 = best)."""
    items = sorted(values.items(), key=lambda kv: (-kv[1] if descending else kv[1], kv[0]))
    ranks: dict[str, float] = {}
    i = 0
    while i < len(items):
        j = i
        while j + 1 < len(items) and items[j + 1][1] == items[i][1]:
            j += 1
        rank = (i + 1 + j + 1) / 2.0
        for k in range(i, j + 1):
            ranks[items[k][0]] = rank
        i = j + 1
    return ranks


def ground_truth_ranks(table: AccuracyTable, task_id: str) -> dict[str, float]:
    """Per-model rank on one task: higher accuracy means smaller rank."""
    return average_ranks(table.column(task_id), descending=True)


def rank_table(table: AccuracyTable) -> dict[str, dict[str, float]]:
    """Ground-truth ranks for every task, keyed by task id."""
    return {t: ground_truth_ranks(table, t) for t in table.tasks}


def predicted_rank(
    similarity: SimilarityDistribution,
    ranks: dict[str, dict[str, float]],
    model_id: str,
) -> float:
    """Similarity-weighted average of the model's source-task ranks."""
    total = 0.0
    for source_id, weight in similarity.weights.items():
        if source_id not in ranks:
            raise KeyError(f"no ranks for source task {source_id!r}")
        if model_id not in ranks[source_id]:
            raise KeyError(f"no rank for model {model_id!r} on {source_id!r}")
        total += weight * ranks[source_id][model_id]
    return total


# Scores are compared at this resolution when sorting. Aggregated ranks that
# genuinely differ do so by at least 1/(2 * n_sources) (far above it), while
# float dust from near-degenerate weights sits far below it, so quantizing
# keeps orderings deterministic instead of leaking rounding noise into ties.
SCORE_QUANTUM = 1e-6


def ranking(scores: dict[str, float], target_id: str = "") -> PredictedRanking:
    """Sort models by ascending score; ties (at quantum resolution) break
    lexicographically by model id."""
    if not scores:
        raise InsufficientDataError("no model scores to rank")
    for m, s in scores.items():
        if not np.isfinite(s):
            raise ParameterError(f"score for {m!r} is not finite")
    order = tuple(sorted(scores, key=lambda m: (round(scores[m] / SCORE_QUANTUM), m)))
    return PredictedRanking(
        target_id=target_id,
        scores={m: float(scores[m]) for m in order},
        order=order,
    )


def baseline_inb(table: AccuracyTable, benchmark_task_id: str) -> PredictedRanking:
    """Rank every target by the models' accuracy on one designated benchmark
    column (the same order is reused for all targets)."""
    column = table.column(benchmark_task_id)
    return ranking({m: -a for m, a in column.items()}, target_id=benchmark_task_id)


def baseline_avgrank(table: AccuracyTable, exclude_task_id: str) -> PredictedRanking:
    """Rank models by their mean rank over every task except the target."""
    sources = [t for t in table.tasks if t != exclude_task_id]
    if not sources:
        raise InsufficientDataError("no source tasks left after exclusion")
    ranks = {t: ground_truth_ranks(table, t) for t in sources}
    means = {
        m: sum(ranks[t][m] for t in sources) / len(sources) for m in table.models
    }
    return ranking(means, target_id=exclude_task_id)
