"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. Tolerances are pinned here and nowhere else.
"""

import itertools
import math
import time
from dataclasses import replace

import numpy as np

from condsel import (
    AttributionConfig,
    BlockSpec,
    RunConfig,
    ToyNetwork,
    asymmetry_witness,
    evaluate_baseline,
    forward,
    generate_synthetic_world,
    importance,
    kendall_tau_at_k,
    leave_one_out,
    ndcg_at_k,
    normalize,
    objective,
    random_network,
    verify_tail_bound,
)
from condsel.attribution import KIND_AFFINE, _conductance_all_blocks
from condsel.cli import main
from condsel.ranking import PredictedRanking, baseline_avgrank
from condsel.representation import alignment_objective
from condsel.rng import stream


def _check(label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] {label}{suffix}")
    assert ok, f"{label}{suffix}"


# --------------------------------------------------------------------------
# criterion 1: completeness of conductance
# --------------------------------------------------------------------------

BATTERY_KEY = 57


def _battery_nets():
    nets = []
    for t in range(20):
        dims = [4, 6, 4, 3] if t % 2 == 0 else [4, 5, 3]
        w = 0.2 + (0.45 - 0.2) * t / 19.0
        nets.append(
            (random_network((BATTERY_KEY, t), dims, weight_scale=w,
                            bias_scale=0.2), dims, t)
        )
    return nets


def test_c1_completeness():
    started = time.monotonic()
    worst = {64: 0.0, 128: 0.0, 256: 0.0}
    for net, dims, t in _battery_nets():
        rng = stream("battery-inputs", BATTERY_KEY, t)
        for _ in range(20):
            x = rng.normal(0.0, 0.5, size=dims[0])
            _, emb = forward(net, x)
            _, emb0 = forward(net, np.zeros(dims[0]))
            span = objective(emb) - objective(emb0)
            for steps in (64, 128, 256):
                pers = _conductance_all_blocks(net, x, AttributionConfig(steps=steps))
                defect = max(abs(float(p.sum()) - span) for p in pers)
                worst[steps] = max(worst[steps], defect)
    elapsed = time.monotonic() - started
    ok = (
        worst[256] <= 1e-3
        and worst[64] >= 2.0 * worst[128]
        and worst[128] >= 2.0 * worst[256]
        and elapsed < 5.0
    )
    _check(
        "C1 completeness",
        ok,
        f"err256={worst[256]:.2e} halving x{worst[64] / worst[128]:.4f} "
        f"x{worst[128] / worst[256]:.4f} in {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# criterion 2: affine exactness
# --------------------------------------------------------------------------


def test_c2_affine_exactness():
    rng = stream("affine-acceptance")
    worst = 0.0
    for _ in range(10):
        dims = [4, 6, 3]
        blocks = tuple(
            BlockSpec(
                kind=KIND_AFFINE,
                weight=rng.normal(0.0, 0.5, size=(dims[i + 1], dims[i])),
                bias=np.zeros(dims[i + 1]),
            )
            for i in range(len(dims) - 1)
        )
        net = ToyNetwork(blocks=blocks)
        x = rng.normal(0.0, 1.0, size=dims[0])
        one = _conductance_all_blocks(net, x, AttributionConfig(steps=1))
        many = _conductance_all_blocks(net, x, AttributionConfig(steps=1000))
        worst = max(
            worst,
            max(float(np.max(np.abs(a - b))) for a, b in zip(one, many)),
        )
    _check("C2 affine exactness", worst <= 1e-12, f"max |n=1 - n=1000| = {worst:.2e}")


# --------------------------------------------------------------------------
# criterion 3: softmax optimality
# --------------------------------------------------------------------------


def test_c3_softmax_optimality():
    rng = stream("optimality-acceptance")
    violations = 0
    for _ in range(100):
        d = int(rng.integers(2, 12))
        u = normalize(rng.random(d) + 0.01)
        eta = float(rng.uniform(0.5, 6.0))
        alpha = importance(u, eta).alpha
        best = alignment_objective(alpha, u, eta)
        draws = rng.dirichlet(np.ones(d), size=10_000)
        values = np.array([alignment_objective(a, u, eta) for a in draws])
        violations += int(np.any(values > best + 1e-12))
    _check("C3 softmax optimality", violations == 0,
           f"{violations} violations over 100 instances x 10k points")


# --------------------------------------------------------------------------
# criteria 4 and 5: tail-mass lemma and relaxation decomposition
# --------------------------------------------------------------------------


def _random_bound_instances(n):
    rng = stream("bound-acceptance")
    out = []
    while len(out) < n:
        d = int(rng.integers(3, 12))
        u = rng.random(d)
        eta = float(rng.uniform(0.2, 9.0))
        k = int(rng.integers(1, d))
        delta = rng.random(d) * 5.0
        report = verify_tail_bound(u, eta, k, delta)
        if report.lemma_applicable:
            out.append(report)
    return out


def test_c4_tail_mass_lemma():
    reports = _random_bound_instances(1000)
    violations = sum(not r.lemma_holds for r in reports)
    _check("C4 tail-mass bound", violations == 0,
           f"{violations} violations over {len(reports)} instances")


def test_c5_relaxation_decomposition():
    reports = _random_bound_instances(1000)
    identity = sum(r.decomposition_error > 1e-12 for r in reports)
    residual = sum(not r.residual_bound_holds for r in reports)
    proximity = sum(not r.proximity_bound_holds for r in reports)
    _check(
        "C5 relaxation decomposition",
        identity == 0 and residual == 0 and proximity == 0,
        f"identity={identity} residual={residual} proximity={proximity}",
    )


# --------------------------------------------------------------------------
# criterion 6: asymmetry witness
# --------------------------------------------------------------------------


def test_c6_asymmetry_witness():
    forward_record, reverse_record = asymmetry_witness(eta=10.0)
    ok = forward_record.value < 0.05 and reverse_record.value > 0.5
    _check(
        "C6 asymmetry witness",
        ok,
        f"forward={forward_record.value:.6f} reverse={reverse_record.value:.3f}",
    )


# --------------------------------------------------------------------------
# criterion 7: metric oracles
# --------------------------------------------------------------------------


def test_c7_metric_oracles():
    rng = stream("metric-acceptance")
    models = list("ABCDEFGH")
    ndcg_bad = tau_bad = small_bad = 0
    for _ in range(1000):
        pred_order = list(rng.permutation(models))
        acc = {m: float(rng.integers(0, 7)) for m in models}
        from condsel.ranking import average_ranks

        truth = average_ranks(acc, descending=True)
        k = int(rng.integers(2, 6))
        predicted = PredictedRanking(
            target_id="t",
            scores={m: float(i) for i, m in enumerate(pred_order)},
            order=tuple(pred_order),
        )
        got_ndcg = ndcg_at_k(predicted, truth, k)
        got_tau = kendall_tau_at_k(predicted, truth, k)

        members = sorted(
            m for m in models if pred_order.index(m) < k and truth[m] <= k
        )
        if len(members) < 2:
            small_bad += int(got_ndcg != 0.0 or got_tau != 0.0)
            continue

        by_truth = sorted(members, key=lambda m: (truth[m], m))
        rel = {m: len(members) - i for i, m in enumerate(by_truth)}
        ordered = sorted(members, key=lambda m: pred_order.index(m))
        dcg = sum((2 ** rel[m] - 1) / math.log2(i + 2)
                  for i, m in enumerate(ordered))
        idcg = max(
            sum((2 ** rel[m] - 1) / math.log2(i + 2) for i, m in enumerate(p))
            for p in itertools.permutations(members)
        )
        ndcg_bad += int(abs(got_ndcg - dcg / idcg) > 1e-12)

        xs = [pred_order.index(m) for m in members]
        ys = [truth[m] for m in members]
        c = d = tx = ty = 0
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                sx, sy = xs[i] - xs[j], ys[i] - ys[j]
                if sx == 0:
                    tx += 1
                if sy == 0:
                    ty += 1
                if sx != 0 and sy != 0:
                    if (sx > 0) == (sy > 0):
                        c += 1
                    else:
                        d += 1
        if (c + d + tx) == 0 or (c + d + ty) == 0:
            expected_tau = 0.0
        else:
            expected_tau = (c - d) / math.sqrt((c + d + tx) * (c + d + ty))
        tau_bad += int(got_tau != expected_tau)
    _check(
        "C7 metric oracles",
        ndcg_bad == 0 and tau_bad == 0 and small_bad == 0,
        f"ndcg={ndcg_bad} tau={tau_bad} small-intersection={small_bad} over 1000",
    )


# --------------------------------------------------------------------------
# criteria 8, 9, 10: synthetic-world pipeline checks
# --------------------------------------------------------------------------


def _default_world():
    return generate_synthetic_world(0, n_models=8, n_tasks=6, d=6,
                                    noise=0.05, n_samples=120)


def test_c8_baseline_reduction():
    world = _default_world()
    config = RunConfig(gamma=1e-9, runs=3)
    report = leave_one_out(world.bundles, world.table, config)
    mismatches = sum(
        order != baseline_avgrank(world.table, target).order
        for (_, target), order in report.rankings.items()
    )
    _check("C8 baseline reduction", mismatches == 0,
           f"{mismatches} order mismatches over {len(report.rankings)}")


def test_c9_end_to_end_signal_recovery():
    started = time.monotonic()
    world = _default_world()
    config = RunConfig()  # eta=2, gamma=5, k=5, n_src=25, n_tgt=1, runs=10
    ours = leave_one_out(world.bundles, world.table, config)
    avg = evaluate_baseline(world.table, config, "avgrank")
    elapsed = time.monotonic() - started
    margin = ours.summary.mean["ndcg"] - avg.summary.mean["ndcg"]
    _check(
        "C9 end-to-end signal recovery",
        margin >= 0.03 and elapsed < 30.0,
        f"ours={ours.summary.mean['ndcg']:.4f} "
        f"avgrank={avg.summary.mean['ndcg']:.4f} margin={margin:+.4f} "
        f"in {elapsed:.1f}s",
    )


def test_c10_sampling_saturation():
    world = _default_world()
    config = RunConfig()
    means = {}
    for n in (1, 25, 50, 100):
        report = leave_one_out(world.bundles, world.table, replace(config, n_src=n))
        means[n] = report.summary.mean["ndcg"]
    plateau = max(
        abs(means[a] - means[b]) for a, b in ((25, 50), (25, 100), (50, 100))
    )
    low_gap = means[25] - means[1]
    noise_free = world.noise == 0.0
    ok = plateau < 0.03 and (low_gap > 0.03 or noise_free)
    _check(
        "C10 sampling saturation",
        ok,
        f"n1={means[1]:.4f} n25={means[25]:.4f} n50={means[50]:.4f} "
        f"n100={means[100]:.4f} plateau={plateau:.4f} low-gap={low_gap:+.4f}",
    )


# --------------------------------------------------------------------------
# criterion 11: report determinism
# --------------------------------------------------------------------------


def test_c11_select_determinism(tmp_path):
    world_dir = tmp_path / "world"
    assert main(["synth", "--out", str(world_dir), "--seed", "0"]) == 0
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        code = main([
            "select",
            "--bundles", str(world_dir / "bundles"),
            "--accuracy", str(world_dir / "accuracy.csv"),
            "--out", str(out),
        ])
        assert code == 0
        outputs.append(out)
    same = all(
        (outputs[0] / f).read_bytes() == (outputs[1] / f).read_bytes()
        for f in ("report.txt", "report.csv", "rankings.csv")
    )
    _check("C11 select determinism", same, "byte-identical reports")
