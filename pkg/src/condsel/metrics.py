"""Ranking-quality metrics on the intersection of predicted and true top-k.

Both metrics are computed only on models appearing in the top k of *both*
rankings, and both are defined as 0 when that intersection has fewer than
two members. NDCG uses exponential gain on the within-intersection
relevance; the rank correlation is the tie-corrected (tau-b) variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .ranking import PredictedRanking, average_ranks


@dataclass(frozen=True)
class MetricResult:
    """Scores of one predicted ranking against one task's ground truth."""

    task_id: str
    k: int
    intersection_size: int
    ndcg: float
    tau: float

    @property
    def sum(self) -> float:
        return self.ndcg + self.tau


def _predicted_positions(predicted: PredictedRanking) -> dict[str, int]:
    return {m: i + 1 for i, m in enumerate(predicted.order)}


def topk_intersection(
    predicted: PredictedRanking, truth: dict[str, float], k: int
) -> set[str]:
    """Models ranked in the top k by both the prediction and the truth.

    Predicted ranks are 1-based positions in the predicted order; truth
    ranks are tie-averaged, so a model tied at rank k or better counts.
    """
    if set(predicted.order) != set(truth):
        raise ShapeError("predicted and truth rankings cover different models")
    n = len(truth)
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} out of range 1..{n}")
    positions = _predicted_positions(predicted)
    return {m for m in truth if positions[m] <= k and truth[m] <= k}


def ndcg_at_k(predicted: PredictedRanking, truth: dict[str, float], k: int) -> float:
    """Exponential-gain NDCG over the top-k intersection (0 if |I| < 2).

    Relevance of a member is its within-intersection standing under the
    ground truth: the best gets |I|, the worst gets 1. Gains are discounted
    by the member's position in the predicted order.
    """
    members = topk_intersection(predicted, truth, k)
    if len(members) < 2:
        return 0.0
    positions = _predicted_positions(predicted)
    by_truth = sorted(members, key=lambda m: (truth[m], m))
    relevance = {m: len(members) - i for i, m in enumerate(by_truth)}
    by_predicted = sorted(members, key=lambda m: positions[m])
    dcg = sum(
        (2.0 ** relevance[m] - 1.0) / math.log2(i + 2)
        for i, m in enumerate(by_predicted)
    )
    ideal = sorted(relevance.values(), reverse=True)
    idcg = sum((2.0 ** r - 1.0) / math.log2(i + 2) for i, r in enumerate(ideal))
    return dcg / idcg


def kendall_tau_at_k(
    predicted: PredictedRanking, truth: dict[str, float], k: int
) -> float:
    """Tie-corrected rank correlation of predicted vs true ranks on the
    top-k intersection (0 if |I| < 2 or one side is fully tied)."""
    members = sorted(topk_intersection(predicted, truth, k))
    if len(members) < 2:
        return 0.0
    positions = _predicted_positions(predicted)
    xs = [positions[m] for m in members]
    ys = [truth[m] for m in members]
    concordant = discordant = ties_x = ties_y = 0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    denom_x = concordant + discordant + ties_x
    denom_y = concordant + discordant + ties_y
    if denom_x == 0 or denom_y == 0:
        return 0.0
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


def spearman(xs, ys) -> float:
    """Rank correlation: Pearson on tie-averaged ranks, NaN if either input
    is constant."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ShapeError("inputs must be equal-length nonempty vectors")
    rx = _rank_vector(xs)
    ry = _rank_vector(ys)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = math.sqrt(float(sx @ sx) * float(sy @ sy))
    if denom == 0.0:
        return float("nan")
    return float(sx @ sy) / denom


def _rank_vector(values: np.ndarray) -> np.ndarray:
    named = {str(i): float(v) for i, v in enumerate(values)}
    ranks = average_ranks(named, descending=False)
    return np.array([ranks[str(i)] for i in range(values.size)])


@dataclass(frozen=True)
class AggregateSummary:
    """Per-run means and their across-run mean and sample deviation."""

    per_run: dict[int, dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]


def score_ranking(
    predicted: PredictedRanking, truth: dict[str, float], k: int
) -> MetricResult:
    """NDCG, rank correlation, and intersection size in one record."""
    return MetricResult(
        task_id=predicted.target_id,
        k=k,
        intersection_size=len(topk_intersection(predicted, truth, k)),
        ndcg=ndcg_at_k(predicted, truth, k),
        tau=kendall_tau_at_k(predicted, truth, k),
    )


def aggregate(results_by_run: dict[int, list[MetricResult]]) -> AggregateSummary:
    """Mean over tasks within each run, then mean and sample std over runs.

    A single run reports zero deviation.
    """
    if not results_by_run:
        raise ParameterError("nothing to aggregate")
    per_run: dict[int, dict[str, float]] = {}
    for run, results in sorted(results_by_run.items()):
        if not results:
            raise ParameterError(f"run {run} has no results")
        per_run[run] = {
            "ndcg": float(np.mean([r.ndcg for r in results])),
            "tau": float(np.mean([r.tau for r in results])),
            "sum": float(np.mean([r.sum for r in results])),
        }
    names = ("ndcg", "tau", "sum")
    series = {n: np.array([per_run[r][n] for r in sorted(per_run)]) for n in names}
    mean = {n: float(series[n].mean()) for n in names}
    std = {
        n: float(series[n].std(ddof=1)) if len(per_run) > 1 else 0.0 for n in names
    }
    return AggregateSummary(per_run=per_run, mean=mean, std=std)
