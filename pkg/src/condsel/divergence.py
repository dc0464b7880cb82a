"""Directional divergence between task conductance profiles.

The divergence from a target task to a source task is the expectation,
under the target's block-importance weights, of the per-block relative
deviation of the source from the target. It is asymmetric on purpose: a
source is a good match when it covers the blocks the *target* cares about,
no matter what else the source activates. Softmin weighting then turns
divergences over a source pool into a probability distribution.

The salient-set constructions (tail mass, hard set-restricted divergence,
residual) make the relaxation story executable: the smooth divergence
decomposes exactly into a set-restricted part plus a tail remainder, with
the tail mass bounded by ((d-k)/k) * exp(-eta * gap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CrossModelError,
    DegenerateMassError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)
from .representation import (
    DEFAULT_EPSILON,
    ImportanceDistribution,
    TaskRepresentation,
    importance,
    normalize,
)

DEFAULT_GAMMA = 5.0

# Below this remaining salient mass 1 - t the hard distribution is considered
# degenerate and set_restricted_divergence refuses to renormalize.
MIN_SALIENT_MASS = 1e-12


@dataclass(frozen=True)
class DivergenceRecord:
    """Per-block relative deviations and their importance-weighted mean for
    an ordered (target, source) pair under one model."""

    model_id: str
    target_id: str
    source_id: str
    delta: np.ndarray
    value: float


@dataclass(frozen=True)
class SimilarityDistribution:
    """Softmin weights over source tasks for one target."""

    target_id: str
    weights: dict[str, float]
    gamma: float


@dataclass(frozen=True)
class SalientSet:
    """Block indices (1-based) whose normalized conductance reaches the k-th
    largest value; ties may push the size above k."""

    k: int
    indices: frozenset[int]
    threshold: float


@dataclass(frozen=True)
class TailBoundReport:
    """Executable check of the tail-mass bound and the relaxation
    decomposition for one (u, eta, k) instance."""

    k: int
    tail_mass: float
    gap: float
    bound_value: float
    lemma_applicable: bool
    lemma_holds: bool
    value: float
    set_value: float
    residual: float
    delta_max: float
    decomposition_error: float
    residual_bound_holds: bool
    proximity_bound_holds: bool


def relative_deviation(
    v_target: np.ndarray, v_source: np.ndarray, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """|v_t - v_s| / (|v_t| + epsilon), entrywise in the target's context."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    v_t = np.asarray(v_target, dtype=float)
    v_s = np.asarray(v_source, dtype=float)
    if v_t.shape != v_s.shape:
        raise ShapeError(
            f"representation lengths differ: {v_t.shape} vs {v_s.shape}"
        )
    return np.abs(v_t - v_s) / (np.abs(v_t) + epsilon)


def directional_divergence(
    target: TaskRepresentation,
    source: TaskRepresentation,
    alpha: ImportanceDistribution | np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> DivergenceRecord:
    """Importance-weighted relative deviation of ``source`` from ``target``.

    Both representations must come from the same model; cross-model block
    spaces are not comparable.
    """
    if target.model_id != source.model_id:
        raise CrossModelError(
            f"cannot compare tasks across models "
            f"({target.model_id!r} vs {source.model_id!r})"
        )
    a = alpha.alpha if isinstance(alpha, ImportanceDistribution) else np.asarray(alpha)
    delta = relative_deviation(target.v, source.v, epsilon)
    if a.shape != delta.shape:
        raise ShapeError(f"alpha length {a.shape} does not match d {delta.shape}")
    return DivergenceRecord(
        model_id=target.model_id,
        target_id=target.task_id,
        source_id=source.task_id,
        delta=delta,
        value=float(a @ delta),
    )


def similarity_weights(
    divergences: dict[str, float], gamma: float = DEFAULT_GAMMA, target_id: str = ""
) -> SimilarityDistribution:
    """Softmin of the divergences: exp(-gamma * (D - min D)), normalized.

    The min-subtraction pins the best source's raw score at 1, so adding a
    common constant to every divergence cannot change the weights.
    """
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    if not divergences:
        raise InsufficientDataError("no source tasks to weight")
    items = sorted(divergences.items())
    values = np.array([v for _, v in items], dtype=float)
    if not np.all(np.isfinite(values)):
        raise ParameterError("divergences must be finite")
    scores = np.exp(-gamma * (values - np.min(values)))
    probs = scores / np.sum(scores)
    return SimilarityDistribution(
        target_id=target_id,
        weights={name: float(p) for (name, _), p in zip(items, probs)},
        gamma=float(gamma),
    )


def salient_set(u: np.ndarray, k: int) -> SalientSet:
    """Blocks whose normalized conductance is >= the k-th largest value.

    The >= comparison keeps every block tied at the threshold, so the set
    can be larger than k.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    if not 1 <= k <= d:
        raise ParameterError(f"k={k} out of range 1..{d}")
    threshold = float(np.sort(u)[::-1][k - 1])
    indices = frozenset(int(i) + 1 for i in np.flatnonzero(u >= threshold))
    return SalientSet(k=k, indices=indices, threshold=threshold)


def set_restricted_divergence(
    record: DivergenceRecord,
    alpha: ImportanceDistribution | np.ndarray,
    s: SalientSet,
) -> tuple[float, float, float]:
    """(restricted value, tail mass, residual) for one divergence instance.

    The importance weights are renormalized onto the salient set; the tail
    mass is what fell outside it and the residual is the tail's weighted
    deviation, so  value = (1 - tail) * restricted + residual  exactly.
    """
    a = alpha.alpha if isinstance(alpha, ImportanceDistribution) else np.asarray(alpha)
    delta = record.delta
    if a.shape != delta.shape:
        raise ShapeError("alpha and delta lengths differ")
    inside = np.zeros(a.shape[0], dtype=bool)
    inside[[i - 1 for i in s.indices]] = True
    tail = float(np.sum(a[~inside]))
    kept = 1.0 - tail
    if kept <= MIN_SALIENT_MASS:
        raise DegenerateMassError(
            f"salient set keeps only {kept:.3e} importance mass"
        )
    restricted = float(np.sum(a[inside] * delta[inside]) / kept)
    residual = float(np.sum(a[~inside] * delta[~inside]))
    return restricted, tail, residual


def verify_tail_bound(
    u: np.ndarray,
    eta: float,
    k: int,
    delta: np.ndarray | None = None,
) -> TailBoundReport:
    """Check the tail-mass bound and, when ``delta`` is given, the exact
    decomposition plus its residual and proximity bounds.

    The gap is measured between the k-th and (k+1)-th largest entries of u,
    so the bound only applies for k < d with a strictly positive gap.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    if not 1 <= k <= d:
        raise ParameterError(f"k={k} out of range 1..{d}")
    alpha = importance(u, eta).alpha
    s = salient_set(u, k)
    inside = np.zeros(d, dtype=bool)
    inside[[i - 1 for i in s.indices]] = True
    tail = float(np.sum(alpha[~inside]))

    if k == d:
        gap = float("nan")
        applicable = False
        bound = float("inf")
        holds = True
    else:
        sorted_u = np.sort(u)[::-1]
        gap = float(sorted_u[k - 1] - sorted_u[k])
        applicable = gap > 0.0
        bound = (d - k) / k * math.exp(-eta * gap)
        holds = (tail <= bound) if applicable else True

    if delta is None:
        value = set_value = residual = delta_max = float("nan")
        decomposition_error = float("nan")
        residual_ok = proximity_ok = True
    else:
        delta = np.asarray(delta, dtype=float)
        if delta.shape != u.shape:
            raise ShapeError("delta length does not match u")
        value = float(alpha @ delta)
        record = DivergenceRecord("", "", "", delta, value)
        set_value, tail2, residual = set_restricted_divergence(record, alpha, s)
        tail = tail2
        delta_max = float(np.max(delta))
        decomposition_error = abs(value - ((1.0 - tail) * set_value + residual))
        residual_ok = 0.0 <= residual <= delta_max * tail + 1e-15
        proximity_ok = abs(value - set_value) <= 2.0 * delta_max * tail + 1e-15

    return TailBoundReport(
        k=k,
        tail_mass=tail,
        gap=gap,
        bound_value=bound,
        lemma_applicable=applicable,
        lemma_holds=holds,
        value=value,
        set_value=set_value,
        residual=residual,
        delta_max=delta_max,
        decomposition_error=decomposition_error,
        residual_bound_holds=residual_ok,
        proximity_bound_holds=proximity_ok,
    )


def asymmetry_witness(
    eta: float = 10.0, epsilon: float = DEFAULT_EPSILON
) -> tuple[DivergenceRecord, DivergenceRecord]:
    """A concrete pair of tasks whose divergence is strongly direction
    dependent.

    The target relies almost entirely on block 1; the source relies equally
    on blocks 1 and 2 and matches the target exactly on block 1. Forward,
    the source covers everything the target cares about, so the divergence
    is tiny. Reversed, the source-as-target puts half its weight on block 2
    where the original target is nearly inactive, so the divergence is
    large. Returns (forward, reverse) records.
    """
    v_narrow = np.array([1.0, 0.02, 0.02])
    v_broad = np.array([1.0, 1.0, 0.0])
    narrow = TaskRepresentation(
        model_id="witness",
        task_id="narrow",
        v=v_narrow,
        n_samples=1,
        u=normalize(v_narrow, epsilon),
    )
    broad = TaskRepresentation(
        model_id="witness",
        task_id="broad",
        v=v_broad,
        n_samples=1,
        u=normalize(v_broad, epsilon),
    )
    forward = directional_divergence(
        narrow, broad, importance(narrow.u, eta), epsilon
    )
    reverse = directional_divergence(
        broad, narrow, importance(broad.u, eta), epsilon
    )
    return forward, reverse
