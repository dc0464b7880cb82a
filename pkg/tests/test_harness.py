"""Leave-one-out protocol, subsampling, synthetic worlds, sweeps, reports."""

import math

import numpy as np
import pytest

from condsel import (
    AccuracyTable,
    ConductanceBundle,
    RunConfig,
    directional_divergence,
    evaluate_baseline,
    generate_synthetic_world,
    importance,
    leave_one_out,
    predict_target,
    subsample,
    task_representation,
)
from condsel.errors import (
    CoverageError,
    InsufficientDataError,
    ParameterError,
)
from condsel.harness import (
    report_csv,
    report_text,
    sweep_eta_gamma,
    sweep_n_src,
)
from condsel.metrics import aggregate
from condsel.ranking import baseline_avgrank
from condsel.rng import stream


def bundle(model, task, rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return ConductanceBundle(
        model_id=model, task_id=task, block_count=rows.shape[1], samples=rows
    )


class TestRunConfig:
    def test_defaults_match_the_paper_regime(self):
        cfg = RunConfig()
        assert (cfg.eta, cfg.gamma, cfg.k) == (2.0, 5.0, 5)
        assert (cfg.n_src, cfg.n_tgt, cfg.runs) == (25, 1, 10)

    def test_positivity_enforced(self):
        with pytest.raises(ParameterError):
            RunConfig(eta=0.0)
        with pytest.raises(ParameterError):
            RunConfig(runs=0)
        with pytest.raises(ParameterError):
            RunConfig(n_src=0)


class TestSubsample:
    def full(self, n=10):
        rng = stream("subsample-fixture")
        return bundle("m", "t", rng.random((n, 3)))

    def test_full_draw_is_identity(self):
        b = self.full()
        out = subsample(b, 10, seed=0)
        np.testing.assert_array_equal(out.samples, b.samples)

    def test_single_row_deterministic(self):
        b = self.full()
        first = subsample(b, 1, seed=7)
        again = subsample(b, 1, seed=7)
        np.testing.assert_array_equal(first.samples, again.samples)

    def test_seeds_give_different_draws(self):
        b = self.full(100)
        a = subsample(b, 10, seed=1)
        c = subsample(b, 10, seed=2)
        assert not np.array_equal(a.samples, c.samples)
        np.testing.assert_array_equal(
            subsample(b, 10, seed=1).samples, a.samples
        )

    def test_rows_keep_original_order(self):
        b = self.full(50)
        out = subsample(b, 20, seed=3)
        idx = [np.flatnonzero((b.samples == row).all(axis=1))[0]
               for row in out.samples]
        assert idx == sorted(idx)

    def test_oversampling_rejected(self):
        with pytest.raises(InsufficientDataError):
            subsample(self.full(5), 6, seed=0)


def two_task_fixture():
    bundles = {
        ("A", "t1"): bundle("A", "t1", [[1.0, 2.0]]),
        ("A", "t2"): bundle("A", "t2", [[1.0, 1.0]]),
        ("B", "t1"): bundle("B", "t1", [[2.0, 1.0]]),
        ("B", "t2"): bundle("B", "t2", [[2.0, 2.0]]),
        ("C", "t1"): bundle("C", "t1", [[1.0, 1.0]]),
        ("C", "t2"): bundle("C", "t2", [[3.0, 1.0]]),
    }
    table = AccuracyTable(
        models=("A", "B", "C"),
        tasks=("t1", "t2"),
        acc=np.array([[0.9, 0.8], [0.6, 0.9], [0.3, 0.1]]),
    )
    return bundles, table


class TestLeaveOneOut:
    def config(self, **kw):
        base = dict(eta=2.0, gamma=5.0, k=2, n_src=1, n_tgt=1, seed=0, runs=1)
        base.update(kw)
        return RunConfig(**base)

    def test_missing_bundle_is_a_coverage_error(self):
        bundles, table = two_task_fixture()
        del bundles[("B", "t2")]
        with pytest.raises(CoverageError, match="B"):
            leave_one_out(bundles, table, self.config())

    def test_inconsistent_sample_counts_rejected(self):
        bundles, table = two_task_fixture()
        bundles[("B", "t2")] = bundle("B", "t2", [[2.0, 2.0], [2.0, 2.0]])
        with pytest.raises(CoverageError, match="sample counts"):
            leave_one_out(bundles, table, self.config())

    def test_degenerate_world_scores_perfectly(self):
        # identical conductance on every task and identical accuracy order
        models = tuple(f"m{i}" for i in range(6))
        tasks = ("t1", "t2", "t3")
        rng = stream("degenerate")
        profiles = {m: rng.random(4) + 0.1 for m in models}
        bundles = {
            (m, t): bundle(m, t, [profiles[m]]) for m in models for t in tasks
        }
        acc = np.array([[0.9 - 0.1 * i] * len(tasks) for i in range(6)])
        table = AccuracyTable(models=models, tasks=tasks, acc=acc)
        report = leave_one_out(
            bundles, table, RunConfig(k=5, n_src=1, n_tgt=1, runs=2)
        )
        for _, row in report.rows:
            assert row.ndcg == 1.0
            assert row.tau == 1.0

    def test_two_task_three_model_manual_trace(self):
        # Single-row bundles force the draws, so every pipeline quantity can
        # be recomputed by hand. With one source task the softmin weight is
        # 1 and the predicted score equals that source's rank.
        bundles, table = two_task_fixture()
        report = leave_one_out(bundles, table, self.config())
        rankings = report.rankings

        # target t2: ranks on t1 are A=1, B=2, C=3 and map through directly
        assert rankings[(0, "t2")] == ("A", "B", "C")
        # target t1: ranks on t2 are B=1, A=2, C=3
        assert rankings[(0, "t1")] == ("B", "A", "C")

        results = {row.task_id: row for _, row in report.rows}
        # both targets: intersection {A, B}, predicted order reversed vs
        # truth, so NDCG = DCG/IDCG with relevances (1, 2) and tau = -1
        dcg = (2 ** 1 - 1) / math.log2(2) + (2 ** 2 - 1) / math.log2(3)
        idcg = (2 ** 2 - 1) / math.log2(2) + (2 ** 1 - 1) / math.log2(3)
        for target in ("t1", "t2"):
            assert results[target].intersection_size == 2
            assert abs(results[target].ndcg - dcg / idcg) <= 1e-12
            assert results[target].tau == -1.0

    def test_three_task_weighted_trace(self):
        # Two sources per target so the softmin mixture matters; all math
        # below is recomputed with plain floats.
        eta, gamma, eps = 2.0, 5.0, 1e-8
        vectors = {
            ("A", "t1"): [1.0, 2.0], ("A", "t2"): [1.1, 1.9], ("A", "t3"): [2.0, 0.5],
            ("B", "t1"): [2.0, 1.0], ("B", "t2"): [0.5, 2.5], ("B", "t3"): [1.5, 1.5],
            ("C", "t1"): [1.0, 1.0], ("C", "t2"): [2.0, 2.0], ("C", "t3"): [0.5, 3.0],
        }
        bundles = {k: bundle(k[0], k[1], [v]) for k, v in vectors.items()}
        table = AccuracyTable(
            models=("A", "B", "C"),
            tasks=("t1", "t2", "t3"),
            acc=np.array([[0.9, 0.8, 0.2], [0.6, 0.9, 0.9], [0.3, 0.1, 0.5]]),
        )
        config = self.config()
        report = leave_one_out(bundles, table, config)

        ranks = {
            "t1": {"A": 1.0, "B": 2.0, "C": 3.0},
            "t2": {"A": 2.0, "B": 1.0, "C": 3.0},
            "t3": {"A": 3.0, "B": 1.0, "C": 2.0},
        }

        def norm(v):
            n = math.sqrt(sum(x * x for x in v))
            return [x / n for x in v]

        def softmax(v, scale):
            w = [math.exp(scale * x) for x in v]
            return [x / sum(w) for x in w]

        def dcd(vt, vs):
            a = softmax(norm(vt), eta)
            return sum(
                a[i] * abs(vt[i] - vs[i]) / (abs(vt[i]) + eps)
                for i in range(len(vt))
            )

        for target in table.tasks:
            sources = [t for t in table.tasks if t != target]
            scores = {}
            for m in table.models:
                divs = [dcd(vectors[(m, target)], vectors[(m, s)]) for s in sources]
                low = min(divs)
                raw = [math.exp(-gamma * (dv - low)) for dv in divs]
                weights = [r / sum(raw) for r in raw]
                scores[m] = sum(
                    w * ranks[s][m] for w, s in zip(weights, sources)
                )
            expected = tuple(sorted(scores, key=lambda m: (scores[m], m)))
            assert report.rankings[(0, target)] == expected

    def test_gamma_to_zero_reduces_to_mean_rank_baseline(self):
        world = generate_synthetic_world(1, n_models=6, n_tasks=4, d=4,
                                         noise=0.05, n_samples=30)
        config = RunConfig(gamma=1e-9, k=4, n_src=10, n_tgt=1, runs=2)
        report = leave_one_out(world.bundles, world.table, config)
        for (run, target), order in report.rankings.items():
            assert order == baseline_avgrank(world.table, target).order

    def test_report_is_deterministic(self):
        world = generate_synthetic_world(2, n_models=5, n_tasks=4, d=4,
                                         noise=0.05, n_samples=30)
        config = RunConfig(k=4, n_src=5, n_tgt=1, runs=2)
        a = leave_one_out(world.bundles, world.table, config)
        b = leave_one_out(world.bundles, world.table, config)
        assert report_csv(a) == report_csv(b)
        assert report_text(a) == report_text(b)
        assert a.rankings == b.rankings

    def test_task_iteration_order_does_not_change_results(self):
        world = generate_synthetic_world(3, n_models=5, n_tasks=4, d=4,
                                         noise=0.05, n_samples=30)
        config = RunConfig(k=4, n_src=5, n_tgt=1, runs=1)
        report = leave_one_out(world.bundles, world.table, config)

        perm = [2, 0, 3, 1]
        table = world.table
        shuffled = AccuracyTable(
            models=table.models,
            tasks=tuple(table.tasks[i] for i in perm),
            acc=table.acc[:, perm],
        )
        shuffled_report = leave_one_out(world.bundles, shuffled, config)
        by_target = {r.task_id: r for _, r in report.rows}
        for _, row in shuffled_report.rows:
            assert row == by_target[row.task_id]

    def test_aggregate_recomputable_from_rows(self):
        world = generate_synthetic_world(4, n_models=5, n_tasks=4, d=4,
                                         noise=0.05, n_samples=30)
        report = leave_one_out(world.bundles, world.table,
                               RunConfig(k=4, n_src=5, runs=3))
        by_run = {}
        for run, row in report.rows:
            by_run.setdefault(run, []).append(row)
        recomputed = aggregate(by_run)
        assert recomputed.mean == report.summary.mean
        assert recomputed.std == report.summary.std


class TestPredictionHygiene:
    def test_target_ranks_never_touched(self):
        bundles, table = two_task_fixture()

        class SpyRanks(dict):
            accessed = []

            def __getitem__(self, key):
                SpyRanks.accessed.append(key)
                return dict.__getitem__(self, key)

        spy = SpyRanks({"t1": {"A": 1.0, "B": 2.0, "C": 3.0}})
        predict_target(
            target_id="t2",
            source_ids=["t1"],
            bundles=bundles,
            source_ranks=spy,
            model_ids=table.models,
            config=RunConfig(k=2, n_src=1, n_tgt=1, runs=1),
            run_seed=0,
        )
        assert set(SpyRanks.accessed) == {"t1"}

    def test_target_in_source_ranks_rejected(self):
        bundles, table = two_task_fixture()
        ranks = {
            "t1": {"A": 1.0, "B": 2.0, "C": 3.0},
            "t2": {"A": 1.0, "B": 2.0, "C": 3.0},
        }
        with pytest.raises(ParameterError):
            predict_target(
                target_id="t2",
                source_ids=["t1"],
                bundles=bundles,
                source_ranks=ranks,
                model_ids=table.models,
                config=RunConfig(k=2, n_src=1, n_tgt=1, runs=1),
                run_seed=0,
            )


class TestSyntheticWorld:
    def test_zero_noise_same_family_orderings_identical(self):
        from condsel.ranking import ground_truth_ranks

        world = generate_synthetic_world(0, noise=0.0)
        by_family = {}
        for t, f in world.family_of.items():
            by_family.setdefault(f, []).append(t)
        for tasks in by_family.values():
            reference = ground_truth_ranks(world.table, tasks[0])
            for t in tasks[1:]:
                assert ground_truth_ranks(world.table, t) == reference

    def test_fixed_seed_reproduces_world_exactly(self):
        a = generate_synthetic_world(11, n_models=4, n_tasks=4, d=4, n_samples=20)
        b = generate_synthetic_world(11, n_models=4, n_tasks=4, d=4, n_samples=20)
        np.testing.assert_array_equal(a.table.acc, b.table.acc)
        for key in a.bundles:
            np.testing.assert_array_equal(
                a.bundles[key].samples, b.bundles[key].samples
            )

    def test_same_family_divergence_below_cross_family(self):
        # full-bundle representations, 20 seeds, at least 90% of models
        hits = total = 0
        for seed in range(20):
            world = generate_synthetic_world(seed)
            tasks = world.table.tasks
            same = [(a, b) for a in tasks for b in tasks
                    if a < b and world.family_of[a] == world.family_of[b]]
            cross = [(a, b) for a in tasks for b in tasks
                     if a < b and world.family_of[a] != world.family_of[b]]
            for m in world.table.models:
                reps = {
                    t: task_representation(world.bundles[(m, t)].samples, m, t)
                    for t in tasks
                }

                def sym(a, b):
                    fwd = directional_divergence(
                        reps[a], reps[b], importance(reps[a].u, 2.0)
                    ).value
                    bwd = directional_divergence(
                        reps[b], reps[a], importance(reps[b].u, 2.0)
                    ).value
                    return 0.5 * (fwd + bwd)

                same_mean = np.mean([sym(a, b) for a, b in same])
                cross_mean = np.mean([sym(a, b) for a, b in cross])
                hits += same_mean < cross_mean
                total += 1
        assert hits / total >= 0.9

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            generate_synthetic_world(0, n_models=1)
        with pytest.raises(ParameterError):
            generate_synthetic_world(0, d=1)
        with pytest.raises(ParameterError):
            generate_synthetic_world(0, noise=-0.1)


class TestSweeps:
    def small_world(self):
        return generate_synthetic_world(5, n_models=5, n_tasks=4, d=4,
                                        noise=0.05, n_samples=30)

    def test_single_cell_grid_equals_single_run(self):
        world = self.small_world()
        config = RunConfig(k=4, n_src=5, runs=1)
        cells = sweep_eta_gamma(world.bundles, world.table, config,
                                etas=(2.0,), gammas=(5.0,))
        report = leave_one_out(world.bundles, world.table, config)
        assert len(cells) == 1
        assert cells[0]["ndcg"] == report.summary.mean["ndcg"]

    def test_full_grid_shape_and_finiteness(self):
        world = self.small_world()
        config = RunConfig(k=4, n_src=5, runs=1)
        cells = sweep_eta_gamma(world.bundles, world.table, config)
        assert len(cells) == 25
        assert all(np.isfinite(c["ndcg"]) and np.isfinite(c["tau"])
                   for c in cells)

    def test_n_src_sweep_rows(self):
        world = self.small_world()
        config = RunConfig(k=4, runs=1)
        cells = sweep_n_src(world.bundles, world.table, config, values=(1, 5, 10))
        assert [c["n_src"] for c in cells] == [1, 5, 10]


class TestBaselineReports:
    def test_avgrank_rows_identical_across_runs(self):
        world = generate_synthetic_world(6, n_models=5, n_tasks=4, d=4,
                                         noise=0.05, n_samples=20)
        report = evaluate_baseline(world.table, RunConfig(k=4, runs=3), "avgrank")
        by_run = {}
        for run, row in report.rows:
            by_run.setdefault(run, []).append(row)
        assert by_run[0] == by_run[1] == by_run[2]

    def test_benchmark_baseline_requires_column(self):
        world = generate_synthetic_world(7, n_models=5, n_tasks=4, d=4,
                                         noise=0.05, n_samples=20)
        with pytest.raises(ParameterError):
            evaluate_baseline(world.table, RunConfig(k=4, runs=1), "inb")
        report = evaluate_baseline(
            world.table,
            RunConfig(k=4, runs=1, benchmark_task=world.table.tasks[0]),
            "inb",
        )
        orders = {order for order in report.rankings.values()}
        assert len(orders) == 1
