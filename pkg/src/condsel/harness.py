"""Leave-one-out selection protocol, synthetic worlds, sweeps, and reports.

Every task takes one turn as the held-out target: its representation is
built from a handful of freshly drawn rows, every other task contributes a
source representation from its own seeded draw, and the target's model
ranking is predicted by softmin-weighted aggregation of the sources'
ground-truth ranks. The target's own accuracy column is touched only when
scoring the prediction, never while making it.

Runs are fully deterministic: run r derives its draws from seed + r, and
each (task, role) pair gets an independently keyed stream, so results are
byte-identical across invocations and invariant to task iteration order.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, replace

import numpy as np

from .analysis import ablation_similarity
from .divergence import (
    DEFAULT_GAMMA,
    directional_divergence,
    similarity_weights,
)
from .errors import (
    CoverageError,
    InsufficientDataError,
    ParameterError,
)
from .metrics import AggregateSummary, MetricResult, aggregate, score_ranking
from .ranking import (
    AccuracyTable,
    PredictedRanking,
    baseline_avgrank,
    baseline_inb,
    ranking,
    rank_table,
)
from .representation import (
    DEFAULT_EPSILON,
    DEFAULT_ETA,
    importance,
    task_representation,
)
from .rng import stream
from .storage import ConductanceBundle
from . import __version__ as _version

METHOD_DIRECTIONAL = "directional"
METHOD_COSINE = "cosine"
METHOD_JSD = "jsd"
METHOD_AVGRANK = "avgrank"
METHOD_INB = "inb"

_SIMILARITY_METHODS = (METHOD_DIRECTIONAL, METHOD_COSINE, METHOD_JSD)


@dataclass(frozen=True)
class RunConfig:
    """Pipeline hyperparameters and protocol settings."""

    eta: float = DEFAULT_ETA
    gamma: float = DEFAULT_GAMMA
    epsilon: float = DEFAULT_EPSILON
    k: int = 5
    n_src: int = 25
    n_tgt: int = 1
    seed: int = 0
    runs: int = 10
    benchmark_task: str | None = None

    def __post_init__(self):
        if self.eta <= 0 or self.gamma <= 0 or self.epsilon <= 0:
            raise ParameterError("eta, gamma, and epsilon must be positive")
        if self.k < 1 or self.n_src < 1 or self.n_tgt < 1 or self.runs < 1:
            raise ParameterError("k, n_src, n_tgt, and runs must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    """Per-(run, target) metric rows plus their aggregate."""

    method: str
    config: RunConfig
    rows: tuple[tuple[int, MetricResult], ...]
    rankings: dict[tuple[int, str], tuple[str, ...]]
    summary: AggregateSummary


def subsample(bundle: ConductanceBundle, n: int, seed: int) -> ConductanceBundle:
    """Uniform without-replacement row subsample, deterministic per
    (seed, task); rows keep their original order."""
    if not 1 <= n <= bundle.n_samples:
        raise InsufficientDataError(
            f"cannot draw {n} of {bundle.n_samples} samples "
            f"for ({bundle.model_id}, {bundle.task_id})"
        )
    rng = stream("subsample", seed, bundle.task_id)
    indices = np.sort(rng.permutation(bundle.n_samples)[:n])
    return replace(bundle, samples=bundle.samples[indices])


def _check_coverage(
    bundles: dict[tuple[str, str], ConductanceBundle], table: AccuracyTable
) -> None:
    missing = [
        (m, t) for m in table.models for t in table.tasks if (m, t) not in bundles
    ]
    if missing:
        raise CoverageError(f"missing bundles for: {missing[:8]}" +
                            (" ..." if len(missing) > 8 else ""))
    for t in table.tasks:
        sizes = {bundles[(m, t)].n_samples for m in table.models}
        if len(sizes) != 1:
            raise CoverageError(
                f"task {t!r} has inconsistent sample counts across models: {sizes}"
            )
    for m in table.models:
        dims = {bundles[(m, t)].block_count for t in table.tasks}
        if len(dims) != 1:
            raise CoverageError(
                f"model {m!r} has inconsistent block counts across tasks: {dims}"
            )


def _draw_representation(
    bundle: ConductanceBundle, n: int, seed: int, role: str
):
    sub = subsample(bundle, n, f"{role}:{seed}")
    return task_representation(sub.samples, bundle.model_id, bundle.task_id)


def predict_target(
    target_id: str,
    source_ids: list[str],
    bundles: dict[tuple[str, str], ConductanceBundle],
    source_ranks: dict[str, dict[str, float]],
    model_ids: tuple[str, ...],
    config: RunConfig,
    run_seed: int,
    method: str = METHOD_DIRECTIONAL,
) -> PredictedRanking:
    """Predicted model ranking for one target from source information only.

    ``source_ranks`` must not contain the target; this function never looks
    at any target-task performance data.
    """
    if method not in _SIMILARITY_METHODS:
        raise ParameterError(f"unknown similarity method {method!r}")
    if not source_ids:
        raise InsufficientDataError("no source tasks")
    if target_id in source_ranks:
        raise ParameterError("source_ranks must not include the target task")
    scores: dict[str, float] = {}
    for m in model_ids:
        target_rep = _draw_representation(
            bundles[(m, target_id)], config.n_tgt, run_seed, "target"
        )
        divergences: dict[str, float] = {}
        for s in source_ids:
            source_rep = _draw_representation(
                bundles[(m, s)], config.n_src, run_seed, "source"
            )
            if method == METHOD_DIRECTIONAL:
                alpha = importance(target_rep.u, config.eta)
                divergences[s] = directional_divergence(
                    target_rep, source_rep, alpha, config.epsilon
                ).value
            else:
                divergences[s] = ablation_similarity(
                    target_rep.v, source_rep.v, method, config.epsilon
                )
        weights = similarity_weights(divergences, config.gamma, target_id)
        scores[m] = sum(
            weights.weights[s] * source_ranks[s][m] for s in source_ids
        )
    return ranking(scores, target_id)


def leave_one_out(
    bundles: dict[tuple[str, str], ConductanceBundle],
    table: AccuracyTable,
    config: RunConfig,
    method: str = METHOD_DIRECTIONAL,
) -> EvalReport:
    """Hold out each task in turn, predict its model ranking from the other
    tasks, and score against its ground-truth ranks; repeated over runs with
    freshly drawn samples."""
    if method in (METHOD_AVGRANK, METHOD_INB):
        return evaluate_baseline(table, config, method)
    _check_coverage(bundles, table)
    ranks = rank_table(table)
    rows: list[tuple[int, MetricResult]] = []
    rankings: dict[tuple[int, str], tuple[str, ...]] = {}
    for run in range(config.runs):
        run_seed = config.seed + run
        for target in table.tasks:
            sources = [t for t in table.tasks if t != target]
            predicted = predict_target(
                target,
                sources,
                bundles,
                {s: ranks[s] for s in sources},
                table.models,
                config,
                run_seed,
                method,
            )
            rows.append((run, score_ranking(predicted, ranks[target], config.k)))
            rankings[(run, target)] = predicted.order
    return _assemble_report(method, config, rows, rankings)


def evaluate_baseline(
    table: AccuracyTable, config: RunConfig, method: str
) -> EvalReport:
    """Score a sample-free baseline through the same leave-one-out loop.

    Baselines do not draw samples, so every run produces identical rows;
    they are still reported per run for comparability.
    """
    ranks = rank_table(table)
    rows: list[tuple[int, MetricResult]] = []
    rankings: dict[tuple[int, str], tuple[str, ...]] = {}
    for run in range(config.runs):
        for target in table.tasks:
            if method == METHOD_AVGRANK:
                predicted = baseline_avgrank(table, target)
            elif method == METHOD_INB:
                if config.benchmark_task is None:
                    raise ParameterError(
                        "benchmark_task must be set for the benchmark baseline"
                    )
                base = baseline_inb(table, config.benchmark_task)
                predicted = PredictedRanking(
                    target_id=target, scores=base.scores, order=base.order
                )
            else:
                raise ParameterError(f"unknown baseline {method!r}")
            rows.append((run, score_ranking(predicted, ranks[target], config.k)))
            rankings[(run, target)] = predicted.order
    return _assemble_report(method, config, rows, rankings)


def _assemble_report(method, config, rows, rankings) -> EvalReport:
    by_run: dict[int, list[MetricResult]] = {}
    for run, result in rows:
        by_run.setdefault(run, []).append(result)
    return EvalReport(
        method=method,
        config=config,
        rows=tuple(rows),
        rankings=rankings,
        summary=aggregate(by_run),
    )


# ---------------------------------------------------------------------------
# Synthetic worlds
# ---------------------------------------------------------------------------

# Relative scales tying the single world noise knob to its effects. Images
# vary most in overall conductance energy (a scalar per image, shared by all
# models since the image set is shared), then in per-block extraction
# jitter; benchmark noise and within-family demand jitter are milder.
GLOBAL_NOISE_MULT = 26.0
SAMPLE_NOISE_MULT = 6.0
ACC_NOISE_MULT = 0.6
JITTER_MULT = 4.0

# How strongly a model's block affinity leans toward its own family's
# demand direction; this is what makes different families prefer different
# models rather than one global ladder.
SPECIALIST_BOOST = 1.5

# Accuracy composition: a model-global quality floor plus a family-dependent
# alignment term. The alignment share is what makes per-family orderings
# genuinely different, which is the structure mean-rank baselines miss.
ACC_BASE = 0.20
QUALITY_SPAN = 0.30
ALIGN_SPAN = 0.45

# Family demand profiles: entries start at DEMAND_BASE + uniform and are
# raised to DEMAND_POWER; higher powers make families easier to tell apart
# from few samples.
DEMAND_BASE = 0.15
DEMAND_POWER = 3

# Fraction of images per task (scaled by the noise knob) that exercise the
# blocks of a random *other* family. Single-image estimates can land on such
# an off-profile image, which is why small sample budgets hurt; the rate is
# shared across models because the image set is.
OUTLIER_RATE_MULT = 1.0


@dataclass(frozen=True)
class SyntheticWorld:
    """Generated bundles and accuracies plus the latent structure that
    produced them (useful for assertions about the generator itself)."""

    bundles: dict[tuple[str, str], ConductanceBundle]
    table: AccuracyTable
    family_of: dict[str, int]
    demands: dict[str, np.ndarray]
    affinities: dict[str, np.ndarray]
    noise: float


def generate_synthetic_world(
    seed: int,
    n_models: int = 8,
    n_tasks: int = 6,
    d: int = 6,
    noise: float = 0.05,
    n_samples: int = 120,
) -> SyntheticWorld:
    """Desk-scale world with planted structure for the pipeline to recover.

    Tasks belong to a small number of demand families; a model's conductance
    on a task is its block affinity modulated by the task's block demands,
    and its accuracy rises with affinity-demand alignment on top of a
    model-specific base quality. Tasks in the same family therefore share
    ground-truth model orderings, which is exactly the signal a selection
    method should exploit.
    """
    if n_models < 2 or n_tasks < 2:
        raise ParameterError("need at least two models and two tasks")
    if d < 2:
        raise ParameterError("need at least two blocks")
    if noise < 0:
        raise ParameterError("noise must be nonnegative")
    model_ids = tuple(f"model{i:02d}" for i in range(n_models))
    task_ids = tuple(f"task{i:02d}" for i in range(n_tasks))
    n_families = min(3, n_tasks)

    family_demands = []
    for f in range(n_families):
        rng = stream("world", seed, "family", f)
        base = DEMAND_BASE + rng.random(d)
        sharp = base ** DEMAND_POWER
        family_demands.append(sharp / np.linalg.norm(sharp))

    family_of: dict[str, int] = {}
    demands: dict[str, np.ndarray] = {}
    for i, t in enumerate(task_ids):
        f = i % n_families
        family_of[t] = f
        rng = stream("world", seed, "task", t)
        jitter = np.exp(JITTER_MULT * noise * rng.normal(size=d))
        demands[t] = family_demands[f] * jitter

    # Per-image structure, shared by every model because the image set is:
    # a scalar energy factor per image, plus occasional off-profile images
    # whose block demands come from another family.
    outlier_rate = min(1.0, OUTLIER_RATE_MULT * noise)
    image_demands: dict[str, np.ndarray] = {}
    image_scales: dict[str, np.ndarray] = {}
    for t in task_ids:
        rng = stream("world", seed, "images", t)
        image_scales[t] = np.exp(GLOBAL_NOISE_MULT * noise * rng.normal(size=n_samples))
        profiles = np.tile(demands[t], (n_samples, 1))
        if n_families > 1:
            others = [g for g in range(n_families) if g != family_of[t]]
            for j in range(n_samples):
                if rng.random() < outlier_rate:
                    profiles[j] = family_demands[others[rng.integers(len(others))]]
        image_demands[t] = profiles

    # Each model leans toward one family's block-demand direction (think
    # architecture families specializing), on top of an idiosyncratic base
    # affinity and a scalar base quality.
    affinities: dict[str, np.ndarray] = {}
    qualities: dict[str, float] = {}
    for i, m in enumerate(model_ids):
        rng = stream("world", seed, "model", m)
        base = rng.uniform(0.5, 1.5, size=d)
        lean = family_demands[i % n_families]
        affinities[m] = base + SPECIALIST_BOOST * lean / np.max(lean)
        qualities[m] = float(rng.uniform(0.0, 1.0))

    bundles: dict[tuple[str, str], ConductanceBundle] = {}
    for m in model_ids:
        for t in task_ids:
            rng = stream("world", seed, "samples", m, t)
            factors = np.exp(
                SAMPLE_NOISE_MULT * noise * rng.normal(size=(n_samples, d))
            )
            rows = (
                affinities[m][None, :]
                * image_demands[t]
                * factors
                * image_scales[t][:, None]
            )
            bundles[(m, t)] = ConductanceBundle(
                model_id=m,
                task_id=t,
                block_count=d,
                samples=rows,
                metadata={
                    "generator": f"condsel-synth/{_version}",
                    "seed": seed,
                    "noise": noise,
                },
            )
    align = np.zeros((n_models, n_tasks))
    for i, m in enumerate(model_ids):
        a = affinities[m] / np.linalg.norm(affinities[m])
        for j, t in enumerate(task_ids):
            w = demands[t] / np.linalg.norm(demands[t])
            align[i, j] = float(a @ w)
    spread = align.max() - align.min()
    align_scaled = (align - align.min()) / (spread if spread > 0 else 1.0)

    acc = np.zeros((n_models, n_tasks))
    for i, m in enumerate(model_ids):
        rng = stream("world", seed, "accuracy", m)
        wobble = rng.normal(size=n_tasks)
        acc[i] = (
            ACC_BASE
            + QUALITY_SPAN * qualities[m]
            + ALIGN_SPAN * align_scaled[i]
            + ACC_NOISE_MULT * noise * wobble
        )
    acc = np.clip(acc, 0.01, 0.99)
    table = AccuracyTable(models=model_ids, tasks=task_ids, acc=acc)

    return SyntheticWorld(
        bundles=bundles,
        table=table,
        family_of=family_of,
        demands=demands,
        affinities=affinities,
        noise=noise,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

ETA_GRID = (1.5, 2.0, 2.5, 3.0, 3.5)
GAMMA_GRID = (3.0, 3.5, 4.0, 4.5, 5.0)
N_SRC_GRID = (1, 5, 10, 25, 50, 100)


def sweep_eta_gamma(
    bundles, table, config: RunConfig, etas=ETA_GRID, gammas=GAMMA_GRID
) -> list[dict]:
    """One aggregate cell per (eta, gamma) grid point."""
    cells = []
    for eta in etas:
        for gamma in gammas:
            report = leave_one_out(
                bundles, table, replace(config, eta=eta, gamma=gamma)
            )
            cells.append({"eta": eta, "gamma": gamma, **report.summary.mean})
    return cells


def sweep_n_src(bundles, table, config: RunConfig, values=N_SRC_GRID) -> list[dict]:
    """One aggregate cell per source-sample budget."""
    cells = []
    for n in values:
        report = leave_one_out(bundles, table, replace(config, n_src=n))
        cells.append({"n_src": n, **report.summary.mean})
    return cells


def sweep_csv(cells: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(cells[0])
    writer.writerow(header)
    for cell in cells:
        writer.writerow([repr(cell[h]) if isinstance(cell[h], float) else cell[h]
                         for h in header])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def report_csv(report: EvalReport) -> str:
    """Machine-readable rows: one line per (run, target) plus aggregates."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run", "target", "intersection", "ndcg", "tau", "sum"])
    for run, r in report.rows:
        writer.writerow(
            [run, r.task_id, r.intersection_size, repr(r.ndcg), repr(r.tau),
             repr(r.sum)]
        )
    writer.writerow([])
    writer.writerow(["metric", "mean", "std"])
    for name in ("ndcg", "tau", "sum"):
        writer.writerow(
            [name, repr(report.summary.mean[name]), repr(report.summary.std[name])]
        )
    return buf.getvalue()


def report_text(report: EvalReport) -> str:
    """Human-readable summary, stable across invocations."""
    cfg = report.config
    lines = [
        f"method: {report.method}",
        (
            f"config: eta={cfg.eta} gamma={cfg.gamma} epsilon={cfg.epsilon} "
            f"k={cfg.k} n_src={cfg.n_src} n_tgt={cfg.n_tgt} seed={cfg.seed} "
            f"runs={cfg.runs}"
        ),
    ]
    if cfg.benchmark_task is not None:
        lines.append(f"benchmark_task: {cfg.benchmark_task}")
    lines.append("")
    lines.append(f"{'run':>3} {'target':<12} {'|I|':>3} {'ndcg':>8} {'tau':>8}")
    for run, r in report.rows:
        lines.append(
            f"{run:>3} {r.task_id:<12} {r.intersection_size:>3} "
            f"{r.ndcg:>8.5f} {r.tau:>8.5f}"
        )
    lines.append("")
    s = report.summary
    lines.append(
        f"ndcg@{cfg.k}: {s.mean['ndcg']:.5f} +/- {s.std['ndcg']:.5f}   "
        f"tau@{cfg.k}: {s.mean['tau']:.5f} +/- {s.std['tau']:.5f}   "
        f"sum: {s.mean['sum']:.5f} +/- {s.std['sum']:.5f}"
    )
    lines.append("")
    return "\n".join(lines)


def rankings_csv(report: EvalReport) -> str:
    """Predicted model order per (run, target)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run", "target", "order"])
    for (run, target), order in sorted(report.rankings.items()):
        writer.writerow([run, target, " ".join(order)])
    return buf.getvalue()
