import math

import numpy as np
import pytest

from warpmatch import (
    FeatureMatrix,
    SwimConfig,
    SynthConfig,
    TrainConfig,
    ValidationError,
    dpw,
    dpw_distance_matrix,
    gen_task,
    run_swim,
)
from warpmatch.swim import _greedy_pairs, _topk_hits


def quick_train() -> TrainConfig:
    return TrainConfig(learning_rate=1e-2, lr_decay=1.5e-3, epochs=40, dropout=False)


class TestDistanceMatrix:
    def test_zero_diagonal_for_identical_sets(self):
        rng = np.random.default_rng(0)
        mats = [FeatureMatrix(rng.uniform(0, 1, (3, 4, 2))) for _ in range(4)]
        d = dpw_distance_matrix(mats, mats)
        assert np.array_equal(np.diag(d), np.zeros(4))

    def test_matches_individual_calls(self):
        rng = np.random.default_rng(1)
        seen = [rng.uniform(0, 5, (3, 3, 2)) for _ in range(2)]
        emerging = [rng.uniform(0, 5, (4, 2, 2)) for _ in range(2)]
        d = dpw_distance_matrix(seen, emerging)
        for i in range(2):
            for j in range(2):
                assert d[i, j] == dpw(seen[i], emerging[j])[0]

    def test_mixed_shapes_grouped_correctly(self):
        rng = np.random.default_rng(2)
        seen = [rng.uniform(0, 5, (3, 3, 2)), rng.uniform(0, 5, (2, 5, 2)),
                rng.uniform(0, 5, (3, 3, 2))]
        emerging = [rng.uniform(0, 5, (4, 2, 2)), rng.uniform(0, 5, (4, 2, 2)),
                    rng.uniform(0, 5, (2, 2, 2))]
        d = dpw_distance_matrix(seen, emerging)
        for i in range(3):
            for j in range(3):
                assert d[i, j] == dpw(seen[i], emerging[j])[0]

    def test_parallel_equals_serial(self):
        rng = np.random.default_rng(3)
        seen = [rng.uniform(0, 1, (3, 3, 2)) for _ in range(6)]
        emerging = [rng.uniform(0, 1, (3, 3, 2)) for _ in range(6)]
        serial = dpw_distance_matrix(seen, emerging, workers=1)
        parallel = dpw_distance_matrix(seen, emerging, workers=3)
        assert np.array_equal(serial, parallel)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            dpw_distance_matrix([np.ones((2, 2, 2))], [np.ones((2, 2, 3))])

    def test_workers_env_default(self, monkeypatch):
        monkeypatch.setenv("WARPMATCH_WORKERS", "2")
        rng = np.random.default_rng(4)
        seen = [rng.uniform(0, 1, (2, 2, 1)) for _ in range(2)]
        d = dpw_distance_matrix(seen, seen)
        assert d.shape == (2, 2)


class TestGreedyBuild:
    def test_orders_by_best_distance(self):
        dist = np.array([
            [5.0, 1.0, 9.0],
            [4.0, 7.0, 2.0],
        ])
        pairs, dists = _greedy_pairs(dist, 3)
        assert list(dists) == sorted(dists)
        assert pairs.pairs[0] == (0, 1)  # emerging 1 has the global best 1.0
        assert pairs.pairs[1] == (1, 2)

    def test_ties_take_lowest_index(self):
        dist = np.array([
            [3.0, 3.0],
            [3.0, 3.0],
        ])
        pairs, _ = _greedy_pairs(dist, 2)
        assert pairs.pairs == ((0, 0), (0, 1))

    def test_topk_hits_rank_semantics(self):
        dist = np.array([
            [0.0, 2.0],
            [1.0, 1.0],
            [2.0, 0.0],
        ])
        top1, top5 = _topk_hits(dist, truth=[0, 2], ks=(1, 5))
        assert top1 == 1.0 and top5 == 1.0
        top1, _ = _topk_hits(dist, truth=[1, 1], ks=(1, 5))
        assert top1 == 0.0


class TestRunSwim:
    def test_single_item_set(self):
        rng = np.random.default_rng(5)
        seen = [FeatureMatrix(rng.uniform(0.2, 0.8, (3, 3, 2)))]
        emerging = [FeatureMatrix(rng.uniform(0.2, 0.8, (3, 3, 2)))]
        cfg = SwimConfig(alpha=1, hidden=4, train=TrainConfig(epochs=1, dropout=False),
                         max_sloma_iters=2, seed=0)
        assignment, params, steps = run_swim(seen, emerging, cfg)
        assert len(steps) == 1
        assert assignment.pairs == ((0, 0),)

    def test_outer_iteration_count_is_ceil_n_over_alpha(self):
        rng = np.random.default_rng(6)
        n = 5
        seen = [FeatureMatrix(rng.uniform(0.2, 0.8, (2, 3, 2))) for _ in range(n)]
        emerging = [FeatureMatrix(rng.uniform(0.2, 0.8, (2, 3, 2))) for _ in range(n)]
        for alpha in (1, 2, 3, 5):
            cfg = SwimConfig(alpha=alpha, hidden=4,
                             train=TrainConfig(epochs=1, dropout=False),
                             max_sloma_iters=1, seed=0)
            _, _, steps = run_swim(seen, emerging, cfg)
            assert len(steps) == math.ceil(n / alpha)
            assert steps[-1].n_pairs == n
            ns = [s.n_pairs for s in steps]
            assert ns == [min(alpha * t, n) for t in range(1, len(steps) + 1)]

    def test_emerging_indices_distinct_and_distances_nondecreasing(self):
        rng = np.random.default_rng(7)
        n = 6
        seen = [FeatureMatrix(rng.uniform(0.2, 0.8, (3, 3, 2))) for _ in range(n)]
        emerging = [FeatureMatrix(rng.uniform(0.2, 0.8, (3, 3, 2))) for _ in range(n)]
        cfg = SwimConfig(alpha=2, hidden=4, train=TrainConfig(epochs=1, dropout=False),
                         max_sloma_iters=1, seed=0)
        _, _, steps = run_swim(seen, emerging, cfg)
        for step in steps:
            ls = [l for _, l in step.pairs]
            assert len(set(ls)) == len(ls)
            assert list(step.pair_distances) == sorted(step.pair_distances)

    def test_alpha_exceeding_set_size_rejected(self):
        rng = np.random.default_rng(8)
        mats = [FeatureMatrix(rng.uniform(0, 1, (2, 2, 1))) for _ in range(2)]
        cfg = SwimConfig(alpha=3, hidden=4, train=TrainConfig(epochs=1), seed=0)
        with pytest.raises(ValidationError):
            run_swim(mats, mats, cfg)

    def test_size_mismatch_rejected(self):
        rng = np.random.default_rng(9)
        a = [FeatureMatrix(rng.uniform(0, 1, (2, 2, 1)))]
        b = [FeatureMatrix(rng.uniform(0, 1, (2, 2, 1)))] * 0
        cfg = SwimConfig(alpha=1, hidden=4, train=TrainConfig(epochs=1), seed=0)
        with pytest.raises(ValidationError):
            run_swim(a, list(b), cfg)

    def test_small_synthetic_task_matches_well(self):
        scfg = SynthConfig(n_classes=6, height=6, width=6, channels=4,
                           warp=0.3, map_kind="affine_sigmoid", map_gain=2.0,
                           noise_std=0.01, seed=21)
        seen, emerging, tm = gen_task(scfg)
        truth = [tm[cid] for cid in emerging.class_ids]
        cfg = SwimConfig(alpha=2, eps=1e-3, hidden=24, train=quick_train(),
                         max_sloma_iters=10, seed=1)
        assignment, params, steps = run_swim(
            seen.matrices, emerging.matrices, cfg, truth=truth)
        assert steps[-1].top1 is not None and steps[-1].top1 >= 0.5
        correct = sum(1 for k, l in assignment.pairs if truth[l] == k)
        assert correct >= 3

    def test_alpha_equals_n_single_round(self):
        rng = np.random.default_rng(10)
        n = 4
        seen = [FeatureMatrix(rng.uniform(0.2, 0.8, (2, 3, 2))) for _ in range(n)]
        emerging = [FeatureMatrix(rng.uniform(0.2, 0.8, (2, 3, 2))) for _ in range(n)]
        cfg = SwimConfig(alpha=n, hidden=4, train=TrainConfig(epochs=1, dropout=False),
                         max_sloma_iters=1, seed=0)
        _, _, steps = run_swim(seen, emerging, cfg)
        assert len(steps) == 1
        assert steps[0].n_pairs == n
