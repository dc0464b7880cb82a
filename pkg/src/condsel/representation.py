"""Task representations and the target-conditioned block-importance weights.

A task is summarised, per model, by the empirical mean of its per-image
block-conductance vectors. The normalized form feeds an entropy-regularized
alignment problem whose unique maximizer is a softmax at temperature eta;
that softmax is the importance distribution used to weight blocks when
comparing tasks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ParameterError, ShapeError

DEFAULT_EPSILON = 1e-8
DEFAULT_ETA = 2.0


@dataclass(frozen=True)
class TaskRepresentation:
    """Mean conductance vector v of one task under one model, with its
    normalized form u cached."""

    model_id: str
    task_id: str
    v: np.ndarray
    n_samples: int
    u: np.ndarray

    @property
    def block_count(self) -> int:
        return int(self.v.shape[0])


@dataclass(frozen=True)
class ImportanceDistribution:
    """Strictly positive block weights summing to one, at temperature eta."""

    alpha: np.ndarray
    eta: float


def task_representation(
    samples, model_id: str, task_id: str, epsilon: float = DEFAULT_EPSILON
) -> TaskRepresentation:
    """Component-wise mean of the per-image conductance vectors."""
    rows = [np.asarray(s, dtype=float) for s in samples]
    if not rows:
        raise InsufficientDataError(
            f"no conductance samples for ({model_id}, {task_id})"
        )
    d = rows[0].shape
    if any(r.shape != d for r in rows):
        raise ShapeError("conductance samples have inconsistent lengths")
    if any(np.any(r < 0) for r in rows):
        raise ShapeError("conductance samples must be nonnegative")
    v = np.mean(rows, axis=0)
    return TaskRepresentation(
        model_id=model_id,
        task_id=task_id,
        v=v,
        n_samples=len(rows),
        u=normalize(v, epsilon),
    )


def normalize(v: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """v / max(||v||, epsilon); the epsilon keeps zero vectors finite."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ShapeError("cannot normalize an empty vector")
    return v / max(float(np.linalg.norm(v)), epsilon)


def importance(u: np.ndarray, eta: float = DEFAULT_ETA) -> ImportanceDistribution:
    """Softmax of eta * u, computed with max-subtraction.

    This is the closed-form maximizer of <alpha, u> + H(alpha)/eta over the
    simplex, so larger normalized conductance draws more weight while the
    entropy term keeps every block's weight strictly positive.
    """
    if eta <= 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        raise ShapeError("cannot compute importance of an empty vector")
    z = eta * u
    z = z - np.max(z)
    w = np.exp(z)
    return ImportanceDistribution(alpha=w / np.sum(w), eta=float(eta))


def alignment_objective(alpha: np.ndarray, u: np.ndarray, eta: float) -> float:
    """<alpha, u> + H(alpha)/eta, the quantity ``importance`` maximizes.

    Entries with alpha == 0 contribute nothing to the entropy (0 log 0 = 0),
    so boundary points of the simplex are scored correctly.
    """
    alpha = np.asarray(alpha, dtype=float)
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(alpha > 0, np.log(np.where(alpha > 0, alpha, 1.0)), 0.0)
    entropy = -float(np.sum(alpha * logs))
    return float(alpha @ u) + entropy / eta
