"""Command-line interface.

Subcommands:
  extract-toy    run block-conductance attribution on a toy network
  synth          generate a synthetic world (bundles + accuracy CSV)
  select         leave-one-out model selection over a bundle directory
  sweep          hyperparameter or sample-budget sweeps, CSV output
  analyze        gap matrices, proxy reliability, model correlations
  verify-theory  randomized checks of the divergence theory

Exit status is nonzero on any validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ANALYSIS_ETA,
    GapMatrix,
    conductance_gap,
    model_correlation_matrix,
    performance_gap,
    proxy_reliability,
)
from .attribution import AttributionConfig, conductance_vector, random_network
from .divergence import asymmetry_witness, verify_tail_bound
from .errors import ValidationError
from .harness import (
    METHOD_DIRECTIONAL,
    RunConfig,
    evaluate_baseline,
    generate_synthetic_world,
    leave_one_out,
    rankings_csv,
    report_csv,
    report_text,
    sweep_csv,
    sweep_eta_gamma,
    sweep_n_src,
)
from .representation import importance, normalize, task_representation
from .rng import stream
from .storage import (
    ConductanceBundle,
    bundle_filename,
    load_accuracy_table,
    load_bundle_dir,
    load_matrix_csv,
    load_network,
    save_accuracy_table,
    save_bundle,
    save_matrix_csv,
)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=RunConfig.eta)
    p.add_argument("--gamma", type=float, default=RunConfig.gamma)
    p.add_argument("--epsilon", type=float, default=RunConfig.epsilon)
    p.add_argument("--k", type=int, default=RunConfig.k)
    p.add_argument("--n-src", type=int, default=RunConfig.n_src)
    p.add_argument("--n-tgt", type=int, default=RunConfig.n_tgt)
    p.add_argument("--seed", type=int, default=RunConfig.seed)
    p.add_argument("--runs", type=int, default=RunConfig.runs)


def _config_from(args) -> RunConfig:
    return RunConfig(
        eta=args.eta,
        gamma=args.gamma,
        epsilon=args.epsilon,
        k=args.k,
        n_src=args.n_src,
        n_tgt=args.n_tgt,
        seed=args.seed,
        runs=args.runs,
        benchmark_task=getattr(args, "benchmark_task", None),
    )


def cmd_extract_toy(args) -> int:
    if args.network:
        net = load_network(args.network)
    else:
        net = random_network(args.builtin_seed, [4, 6, 4, 3])
    if args.inputs:
        doc = json.loads(Path(args.inputs).read_text(encoding="utf-8"))
        inputs = [np.asarray(row, dtype=float) for row in doc["inputs"]]
    else:
        rng = stream("extract-toy-inputs", args.seed)
        inputs = [rng.normal(0.0, 0.5, size=net.input_dim)
                  for _ in range(args.n_inputs)]
    cfg = AttributionConfig(steps=args.steps)
    rows = [conductance_vector(net, x, cfg) for x in inputs]
    bundle = ConductanceBundle(
        model_id=args.model_id,
        task_id=args.task_id,
        block_count=net.depth,
        samples=np.vstack(rows),
        metadata={
            "steps": args.steps,
            "baseline": "zero",
            "extractor": f"condsel-toy/{__version__}",
        },
    )
    save_bundle(bundle, args.out)
    print(f"wrote {args.out}: N={bundle.n_samples} d={bundle.block_count}")
    return 0


def cmd_synth(args) -> int:
    world = generate_synthetic_world(
        seed=args.seed,
        n_models=args.n_models,
        n_tasks=args.n_tasks,
        d=args.blocks,
        noise=args.noise,
        n_samples=args.n_samples,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle_dir = out / "bundles"
    bundle_dir.mkdir(exist_ok=True)
    for (m, t), bundle in sorted(world.bundles.items()):
        save_bundle(bundle, bundle_dir / bundle_filename(m, t))
    save_accuracy_table(world.table, out / "accuracy.csv")
    families = {t: world.family_of[t] for t in world.table.tasks}
    (out / "families.json").write_text(
        json.dumps(families, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"wrote {len(world.bundles)} bundles, accuracy table "
        f"({len(world.table.models)} models x {len(world.table.tasks)} tasks) "
        f"to {out}"
    )
    return 0


def _load_inputs(args):
    bundles = load_bundle_dir(args.bundles)
    table = load_accuracy_table(args.accuracy)
    return bundles, table


def cmd_select(args) -> int:
    bundles, table = _load_inputs(args)
    config = _config_from(args)
    report = leave_one_out(bundles, table, config, method=args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report_text(report), encoding="utf-8")
    (out / "report.csv").write_text(report_csv(report), encoding="utf-8")
    (out / "rankings.csv").write_text(rankings_csv(report), encoding="utf-8")
    if args.with_baselines:
        for name in ("avgrank", "inb"):
            if name == "inb" and config.benchmark_task is None:
                continue
            base = evaluate_baseline(table, config, name)
            (out / f"report_{name}.csv").write_text(
                report_csv(base), encoding="utf-8"
            )
    print(report_text(report), end="")
    return 0


def cmd_sweep(args) -> int:
    bundles, table = _load_inputs(args)
    config = _config_from(args)
    if args.grid == "eta-gamma":
        cells = sweep_eta_gamma(bundles, table, config)
    else:
        values = tuple(int(v) for v in args.values.split(","))
        cells = sweep_n_src(bundles, table, config, values)
    text = sweep_csv(cells)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_analyze(args) -> int:
    bundles, table = _load_inputs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sem = None
    if args.sem_gap:
        labels, values = load_matrix_csv(args.sem_gap)
        sem = GapMatrix(kind="semantic", tasks=labels, values=values)
    gaps = {}
    lines = ["model,rho_cond" + (",rho_sem" if sem is not None else "")]
    for m in table.models:
        reps = {
            t: task_representation(bundles[(m, t)].samples, m, t)
            for t in table.tasks
        }
        cond = conductance_gap(reps, eta=args.analysis_eta)
        perf = performance_gap(table, m)
        # conductance_gap sorts tasks; align the performance matrix with it
        idx = [table.tasks.index(t) for t in cond.tasks]
        perf = GapMatrix(
            kind="performance",
            tasks=cond.tasks,
            values=perf.values[np.ix_(idx, idx)],
        )
        gaps[m] = cond
        save_matrix_csv(cond.tasks, cond.values, out / f"gap_cond_{m}.csv")
        save_matrix_csv(perf.tasks, perf.values, out / f"gap_perf_{m}.csv")
        row = f"{m},{proxy_reliability(perf, cond)!r}"
        if sem is not None:
            row += f",{proxy_reliability(perf, sem)!r}"
        lines.append(row)
    (out / "reliability.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    models, corr = model_correlation_matrix(gaps)
    save_matrix_csv(models, corr, out / "model_correlation.csv", corner="model")
    print("\n".join(lines))
    return 0


def cmd_verify_theory(args) -> int:
    rng = stream("verify-theory", args.seed)
    failures = 0

    forward, reverse = asymmetry_witness(eta=10.0)
    ok = forward.value < 0.05 and reverse.value > 0.5
    failures += not ok
    print(
        f"asymmetry witness: forward={forward.value:.6f} "
        f"reverse={reverse.value:.4f} [{'ok' if ok else 'FAIL'}]"
    )

    lemma_checked = lemma_violations = 0
    decomposition_violations = 0
    for _ in range(args.instances):
        d = int(rng.integers(3, 12))
        u = rng.random(d)
        eta = float(rng.uniform(0.5, 8.0))
        k = int(rng.integers(1, d))
        delta = rng.random(d) * 5.0
        report = verify_tail_bound(u, eta, k, delta)
        if report.lemma_applicable:
            lemma_checked += 1
            lemma_violations += not report.lemma_holds
        decomposition_violations += report.decomposition_error > 1e-12
        decomposition_violations += not report.residual_bound_holds
        decomposition_violations += not report.proximity_bound_holds
    failures += lemma_violations + decomposition_violations
    print(
        f"tail-mass bound: {lemma_checked} applicable instances, "
        f"{lemma_violations} violations"
    )
    print(
        f"relaxation decomposition: {args.instances} instances, "
        f"{decomposition_violations} violations"
    )

    opt_violations = 0
    from .representation import alignment_objective

    for _ in range(args.optimality_instances):
        d = int(rng.integers(2, 10))
        u = rng.normal(size=d)
        eta = float(rng.uniform(0.5, 5.0))
        alpha = importance(normalize(u), eta)
        best = alignment_objective(alpha.alpha, normalize(u), eta)
        draws = rng.dirichlet(np.ones(d), size=1000)
        values = [alignment_objective(a, normalize(u), eta) for a in draws]
        opt_violations += max(values) > best + 1e-12
    failures += opt_violations
    print(
        f"importance optimality: {args.optimality_instances} instances x 1000 "
        f"simplex points, {opt_violations} violations"
    )
    print("verify-theory:", "PASS" if failures == 0 else "FAIL")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condsel",
        description="conductance-profile model selection toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-toy", help="attribution on a toy network")
    p.add_argument("--network", help="toy network JSON (default: built-in)")
    p.add_argument("--builtin-seed", type=int, default=0)
    p.add_argument("--inputs", help="JSON file with an 'inputs' matrix")
    p.add_argument("--n-inputs", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--model-id", default="toy-model")
    p.add_argument("--task-id", default="toy-task")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_toy)

    p = sub.add_parser("synth", help="generate a synthetic world")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-models", type=int, default=8)
    p.add_argument("--n-tasks", type=int, default=6)
    p.add_argument("--blocks", type=int, default=6)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--n-samples", type=int, default=120)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="leave-one-out selection")
    p.add_argument("--bundles", required=True)
    p.add_argument("--accuracy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--method",
        default=METHOD_DIRECTIONAL,
        choices=("directional", "cosine", "jsd", "avgrank", "inb"),
    )
    p.add_argument("--benchmark-task", default=None)
    p.add_argument("--with-baselines", action="store_true")
    _add_run_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("sweep", help="grid sweeps")
    p.add_argument("--bundles", required=True)
    p.add_argument("--accuracy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", choices=("eta-gamma", "n-src"), default="eta-gamma")
    p.add_argument("--values", default="1,5,10,25,50,100",
                   help="n-src grid values (comma separated)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="gap and correlation matrices")
    p.add_argument("--bundles", required=True)
    p.add_argument("--accuracy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--analysis-eta", type=float, default=ANALYSIS_ETA)
    p.add_argument("--sem-gap", default=None,
                   help="precomputed semantic gap matrix CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-theory", help="randomized theory checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--optimality-instances", type=int, default=100)
    p.set_defaults(func=cmd_verify_theory)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
