"""Diagnostic machinery: task-pair gap matrices, proxy-reliability
correlations, model-to-model agreement, and the symmetric ablation metrics.

The performance gap between two tasks is the absolute difference of one
model's scores on them; the conductance gap is the symmetrized directional
divergence (each direction weighted by its own target's importance). A
proxy is judged by the rank correlation between its gaps and the
performance gaps over all unordered task pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergence import directional_divergence
from .errors import InsufficientDataError, ParameterError, ShapeError
from .metrics import spearman
from .representation import (
    DEFAULT_EPSILON,
    TaskRepresentation,
    importance,
)

# Temperature used when reproducing the diagnostic correlations; the
# selection pipeline itself defaults to 2.0.
ANALYSIS_ETA = 2.5


@dataclass(frozen=True)
class GapMatrix:
    """Symmetric task-by-task gap matrix with zero diagonal."""

    kind: str
    tasks: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = len(self.tasks)
        if v.shape != (n, n):
            raise ShapeError(f"gap matrix shape {v.shape} does not match {n} tasks")
        if not np.allclose(v, v.T, atol=0, rtol=0):
            raise ShapeError("gap matrix must be exactly symmetric")
        if np.any(np.diag(v) != 0.0):
            raise ShapeError("gap matrix diagonal must be zero")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tasks", tuple(self.tasks))


def performance_gap(table, model_id: str) -> GapMatrix:
    """|score(task a) - score(task b)| for one model, over all task pairs."""
    if model_id not in table.models:
        raise KeyError(f"unknown model {model_id!r}")
    row = table.acc[table.models.index(model_id)]
    gaps = np.abs(row[:, None] - row[None, :])
    np.fill_diagonal(gaps, 0.0)
    return GapMatrix(kind="performance", tasks=table.tasks, values=gaps)


def conductance_gap(
    representations: dict[str, TaskRepresentation],
    eta: float = ANALYSIS_ETA,
    epsilon: float = DEFAULT_EPSILON,
) -> GapMatrix:
    """Symmetrized directional divergence between every task pair of one
    model: (D(a->b) + D(b->a)) / 2, each direction under its own target's
    importance weights."""
    tasks = tuple(sorted(representations))
    if len(tasks) < 2:
        raise InsufficientDataError("need at least two tasks for a gap matrix")
    alphas = {t: importance(representations[t].u, eta) for t in tasks}
    n = len(tasks)
    gaps = np.zeros((n, n))
    for i, a in enumerate(tasks):
        for j in range(i + 1, n):
            b = tasks[j]
            forward = directional_divergence(
                representations[a], representations[b], alphas[a], epsilon
            ).value
            backward = directional_divergence(
                representations[b], representations[a], alphas[b], epsilon
            ).value
            gaps[i, j] = gaps[j, i] = 0.5 * (forward + backward)
    return GapMatrix(kind="conductance", tasks=tasks, values=gaps)


def _upper_triangle(gm: GapMatrix) -> np.ndarray:
    n = len(gm.tasks)
    iu = np.triu_indices(n, k=1)
    return gm.values[iu]


def proxy_reliability(gt: GapMatrix, proxy: GapMatrix) -> float:
    """Rank correlation between a proxy's gaps and the true performance
    gaps, over the strict upper triangle."""
    if gt.tasks != proxy.tasks:
        raise ShapeError("gap matrices cover different task sets")
    if len(gt.tasks) < 3:
        raise InsufficientDataError("need at least three tasks for correlation")
    return spearman(_upper_triangle(gt), _upper_triangle(proxy))


def model_correlation_matrix(
    gaps_by_model: dict[str, GapMatrix],
) -> tuple[tuple[str, ...], np.ndarray]:
    """Pairwise rank correlation of the models' vectorized gap matrices."""
    models = tuple(sorted(gaps_by_model))
    if len(models) < 2:
        raise InsufficientDataError("need at least two models")
    task_sets = {gaps_by_model[m].tasks for m in models}
    if len(task_sets) != 1:
        raise ShapeError("models' gap matrices cover different task sets")
    vectors = {m: _upper_triangle(gaps_by_model[m]) for m in models}
    n = len(models)
    corr = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            corr[i, j] = corr[j, i] = spearman(vectors[models[i]], vectors[models[j]])
    return models, corr


def _softmax(v: np.ndarray) -> np.ndarray:
    z = v - np.max(v)
    w = np.exp(z)
    return w / np.sum(w)


def ablation_similarity(
    v_target: np.ndarray,
    v_source: np.ndarray,
    metric: str,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Symmetric distance drop-ins used by the ablation study.

    ``cosine`` is 1 minus the cosine similarity of the raw vectors; ``jsd``
    is the Jensen-Shannon divergence (base-2 logs, bounded in [0, 1])
    between the softmax-normalized vectors.
    """
    v_t = np.asarray(v_target, dtype=float)
    v_s = np.asarray(v_source, dtype=float)
    if v_t.shape != v_s.shape:
        raise ShapeError("vectors have different lengths")
    if metric == "cosine":
        denom = max(float(np.linalg.norm(v_t)), epsilon) * max(
            float(np.linalg.norm(v_s)), epsilon
        )
        return 1.0 - float(v_t @ v_s) / denom
    if metric == "jsd":
        p = _softmax(v_t)
        q = _softmax(v_s)
        m = 0.5 * (p + q)
        kl_pm = float(np.sum(p * np.log2(p / m)))
        kl_qm = float(np.sum(q * np.log2(q / m)))
        return 0.5 * (kl_pm + kl_qm)
    raise ParameterError(f"unknown ablation metric {metric!r}")
