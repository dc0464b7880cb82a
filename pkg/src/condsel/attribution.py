"""Block-level conductance attribution on small differentiable networks.

A ToyNetwork is a stack of affine or affine+tanh blocks standing in for a
visual encoder at desk scale. The scalar objective is the Euclidean norm of
the final embedding; each block's conductance is the path integral of the
objective gradient at the block output against the block-output increments,
approximated by an n-step Riemann sum along the straight line from the
baseline to the input. Gradients are closed-form (no autodiff framework).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericOverflowError, ParameterError, ShapeError

KIND_AFFINE = "affine"
KIND_AFFINE_TANH = "affine+tanh"
_KINDS = (KIND_AFFINE, KIND_AFFINE_TANH)

DEFAULT_STEPS = 50


@dataclass(frozen=True)
class BlockSpec:
    """One network block: y = W x + b, optionally followed by tanh."""

    kind: str
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown block kind {self.kind!r}")
        w = np.asarray(self.weight, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ShapeError(f"weight must be 2-d, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError(
                f"bias shape {b.shape} does not match weight rows {w.shape[0]}"
            )
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class ToyNetwork:
    """Ordered blocks with composing dimensions; the last block's output is
    the embedding."""

    blocks: tuple[BlockSpec, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ParameterError("network needs at least one block")
        for i in range(len(blocks) - 1):
            if blocks[i].out_dim != blocks[i + 1].in_dim:
                raise ShapeError(
                    f"block {i + 1} outputs {blocks[i].out_dim} values but "
                    f"block {i + 2} expects {blocks[i + 1].in_dim}"
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def input_dim(self) -> int:
        return self.blocks[0].in_dim

    @property
    def embedding_dim(self) -> int:
        return self.blocks[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class AttributionConfig:
    """Riemann steps and baseline policy (None means the zero vector)."""

    steps: int = DEFAULT_STEPS
    baseline: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.baseline is not None:
            object.__setattr__(
                self, "baseline", np.asarray(self.baseline, dtype=float)
            )

    def baseline_for(self, net: ToyNetwork) -> np.ndarray:
        if self.baseline is None:
            return np.zeros(net.input_dim)
        if self.baseline.shape != (net.input_dim,):
            raise ShapeError(
                f"baseline shape {self.baseline.shape} does not match "
                f"input_dim {net.input_dim}"
            )
        return self.baseline


@dataclass(frozen=True)
class BlockConductance:
    """Signed per-neuron conductances of one block plus the scalar score
    (mean absolute attribution over all entries). Block indices are 1-based."""

    block_index: int
    per_neuron: np.ndarray
    score: float


def forward(net: ToyNetwork, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Evaluate the network, returning all block activations and the embedding."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise ShapeError(
            f"input has {x.shape[-1]} entries, network expects {net.input_dim}"
        )
    acts = []
    h = x
    for blk in net.blocks:
        h = h @ blk.weight.T + blk.bias
        if blk.kind == KIND_AFFINE_TANH:
            h = np.tanh(h)
        acts.append(h)
    return acts, acts[-1]


def objective(embedding: np.ndarray) -> float:
    """Euclidean norm of the embedding (the scalar attribution target)."""
    e = np.asarray(embedding, dtype=float)
    if e.size == 0:
        raise ShapeError("embedding is empty")
    return float(np.linalg.norm(e))


def objective_gradient(embedding: np.ndarray) -> np.ndarray:
    """Gradient of the norm objective; zero (with a diagnostic) at the origin,
    where the norm is not differentiable."""
    e = np.asarray(embedding, dtype=float)
    n = np.linalg.norm(e, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        warnings.warn(
            "embedding norm is zero; objective gradient defined as 0 there",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.divide(e, n, out=np.zeros_like(e), where=n != 0.0)
    return e / n


def _path_gradients(net: ToyNetwork, acts: list[np.ndarray]) -> list[np.ndarray]:
    """Gradient of the objective w.r.t. every block output, one reverse sweep.

    ``acts`` may be batched (rows = path points)."""
    grads: list[np.ndarray] = [np.empty(0)] * net.depth
    g = objective_gradient(acts[-1])
    grads[-1] = g
    for j in range(net.depth - 1, 0, -1):
        blk = net.blocks[j]
        if blk.kind == KIND_AFFINE_TANH:
            g = (g * (1.0 - acts[j] ** 2)) @ blk.weight
        else:
            g = g @ blk.weight
        grads[j - 1] = g
    return grads


def _conductance_all_blocks(
    net: ToyNetwork, x: np.ndarray, cfg: AttributionConfig
) -> list[np.ndarray]:
    """Per-neuron conductance for every block, sharing one batched path."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ShapeError(
            f"input shape {x.shape} does not match input_dim {net.input_dim}"
        )
    base = cfg.baseline_for(net)
    n = cfg.steps
    # Path points x^(0)..x^(n); gradients are taken at x^(1)..x^(n) and paired
    # with the activation increments y^(k) - y^(k-1).
    alphas = np.arange(0, n + 1, dtype=float)[:, None] / n
    points = base[None, :] + alphas * (x - base)[None, :]
    acts, emb = forward(net, points)
    if not np.all(np.isfinite(emb)):
        raise NumericOverflowError("non-finite activations along the path")
    grads = _path_gradients(net, [a[1:] for a in acts])
    out = []
    for i in range(net.depth):
        increments = np.diff(acts[i], axis=0)
        per_neuron = np.sum(grads[i] * increments, axis=0)
        if not np.all(np.isfinite(per_neuron)):
            raise NumericOverflowError(f"non-finite conductance in block {i + 1}")
        out.append(per_neuron)
    return out


def layer_conductance(
    net: ToyNetwork, block_index: int, x: np.ndarray, cfg: AttributionConfig
) -> BlockConductance:
    """Conductance of one block (1-based index) for input ``x``."""
    if not 1 <= block_index <= net.depth:
        raise ParameterError(
            f"block_index {block_index} out of range 1..{net.depth}"
        )
    per = _conductance_all_blocks(net, x, cfg)[block_index - 1]
    return BlockConductance(
        block_index=block_index,
        per_neuron=per,
        score=float(np.mean(np.abs(per))),
    )


def conductance_vector(
    net: ToyNetwork, x: np.ndarray, cfg: AttributionConfig
) -> np.ndarray:
    """Block scores [g(1), ..., g(d)]: mean absolute conductance per block."""
    pers = _conductance_all_blocks(net, x, cfg)
    return np.array([float(np.mean(np.abs(p))) for p in pers])


def random_network(
    seed_key: object,
    dims: list[int],
    kinds: list[str] | None = None,
    weight_scale: float = 0.5,
    bias_scale: float = 0.2,
) -> ToyNetwork:
    """Seeded toy network; weights ~ N(0, scale/sqrt(fan_in)), used by the
    built-in test batteries and the CLI."""
    from .rng import stream

    rng = stream("toy-network", seed_key)
    if kinds is None:
        kinds = [KIND_AFFINE_TANH] * (len(dims) - 2) + [KIND_AFFINE]
    blocks = []
    for i in range(len(dims) - 1):
        w = rng.normal(0.0, weight_scale / np.sqrt(dims[i]), size=(dims[i + 1], dims[i]))
        b = rng.normal(0.0, bias_scale, size=dims[i + 1])
        blocks.append(BlockSpec(kind=kinds[i], weight=w, bias=b))
    return ToyNetwork(blocks=tuple(blocks))
