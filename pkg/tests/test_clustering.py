import numpy as np
import pytest

from crisp import KTooLarge, kmeans, kmeanspp_init, lloyd

from oracles import exhaustive_best_sse, partition_sets


def planted_gaussians(seed=7, sigma=0.5, per_cluster=10):
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    points = np.vstack([c + sigma * rng.normal(size=(per_cluster, 2)) for c in centers])
    labels = np.repeat(np.arange(3), per_cluster)
    return points, labels


class TestInit:
    def test_k_equals_n_selects_every_point(self):
        rng = np.random.default_rng(0)
        points = rng.normal(size=(6, 3))
        centers = kmeanspp_init(points, 6, seed=9)
        # every point appears exactly once (distinct indices)
        matched = {tuple(row) for row in centers}
        assert matched == {tuple(row) for row in points}

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            kmeanspp_init(np.zeros((2, 2)), 3, seed=0)

    def test_k_one_uniform_over_seeds(self):
        points = np.array([[0.0], [1.0], [2.0]])
        picks = [tuple(kmeanspp_init(points, 1, seed=s)[0]) for s in range(300)]
        counts = {p: picks.count(p) for p in set(picks)}
        assert set(counts) == {(0.0,), (1.0,), (2.0,)}
        assert min(counts.values()) > 60  # roughly uniform

    def test_distance_squared_weighting_frequency(self):
        """Conditioned on first pick (0,0), the far point (10,0) must win
        the second draw with probability 100/101 under squared-distance
        weighting (weights are then {0, 1, 100})."""
        points = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0]])
        conditioned = 0
        far = 0
        for seed in range(10_000):
            centers = kmeanspp_init(points, 2, seed=seed)
            if tuple(centers[0]) == (0.0, 0.0):
                conditioned += 1
                if tuple(centers[1]) == (10.0, 0.0):
                    far += 1
        assert conditioned > 3000
        assert far / conditioned == pytest.approx(100.0 / 101.0, abs=0.01)

    def test_duplicate_points_still_distinct_indices(self):
        points = np.zeros((4, 2))
        centers = kmeanspp_init(points, 4, seed=1)
        assert centers.shape == (4, 2)


class TestLloyd:
    def test_fixed_point_converges_in_one_iteration(self):
        points = np.array([[0.0, 0.0], [5.0, 5.0], [-3.0, 2.0]])
        result = lloyd(points, points.copy())
        assert result.converged
        assert result.iterations == 1
        assert result.sse == 0.0
        assert np.array_equal(result.centroids, points)

    def test_two_cluster_line(self):
        points = np.array([[0.0], [1.0], [9.0], [10.0]])
        result = lloyd(points, np.array([[0.0], [10.0]]))
        assert np.allclose(sorted(result.centroids.ravel()), [0.5, 9.5])
        assert result.sse == pytest.approx(1.0, abs=1e-12)
        # exhaustive check: 1.0 is the global optimum over all 2-partitions
        assert exhaustive_best_sse(points, 2) == pytest.approx(1.0, abs=1e-12)

    def test_identical_points_repair(self):
        points = np.ones((4, 3))
        result = lloyd(points, np.ones((2, 3)))
        assert set(result.assignments.tolist()) == {0, 1}
        assert result.sse == 0.0

    def test_trace_monotone(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(4, 25))
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, min(n, 5) + 1))
            points = rng.normal(size=(n, d))
            result = kmeans(points, k, seed=int(rng.integers(0, 1000)))
            trace = np.asarray(result.sse_trace)
            assert np.all(np.diff(trace) <= 1e-12 * (1.0 + trace[:-1]))

    def test_rerun_on_converged_result_changes_nothing(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            points = rng.normal(size=(int(rng.integers(5, 20)), 3))
            first = kmeans(points, 3, seed=0, tol=0.0)
            assert first.converged
            again = lloyd(points, first.centroids, tol=0.0)
            assert np.array_equal(again.assignments, first.assignments)
            assert np.array_equal(again.centroids, first.centroids)
            assert again.sse == first.sse
            assert again.iterations == 1


class TestKMeans:
    def test_k_one_is_global_mean(self):
        rng = np.random.default_rng(1)
        points = rng.normal(size=(12, 4))
        result = kmeans(points, 1, seed=5)
        assert np.allclose(result.centroids[0], points.mean(axis=0), atol=1e-12)
        assert np.array_equal(result.assignments, np.zeros(12, dtype=np.int64))

    def test_k_equals_n(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(7, 3))
        result = kmeans(points, 7, seed=5)
        assert result.sse == pytest.approx(0.0, abs=1e-18)
        assert {tuple(c) for c in result.centroids} == {tuple(p) for p in points}

    def test_planted_clusters_recovered(self):
        points, labels = planted_gaussians(seed=7)
        result = kmeans(points, 3, seed=7)
        assert partition_sets(result.assignments) == partition_sets(labels)

    def test_planted_subsample_matches_exhaustive_optimum(self):
        points, _ = planted_gaussians(seed=7)
        sub = points[[0, 1, 2, 10, 11, 12, 20, 21, 22]]
        result = kmeans(sub, 3, seed=7)
        assert result.sse == pytest.approx(exhaustive_best_sse(sub, 3), abs=1e-9)

    def test_never_beats_exhaustive_optimum(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 10))
            k = int(rng.integers(1, min(n, 3) + 1))
            points = rng.normal(size=(n, 2))
            result = kmeans(points, k, seed=int(rng.integers(0, 100)))
            assert result.sse >= exhaustive_best_sse(points, k) - 1e-9

    def test_scale_equivariance(self):
        """Power-of-two scales keep every floating-point comparison exact,
        so trajectories must match step for step (tol pinned to 0 to keep
        the stopping rule scale-free too)."""
        rng = np.random.default_rng(4)
        points = rng.normal(size=(15, 3))
        base = kmeans(points, 4, seed=9, tol=0.0)
        for c in (0.25, 2.0, 8.0):
            scaled = kmeans(c * points, 4, seed=9, tol=0.0)
            assert np.array_equal(scaled.assignments, base.assignments)
            assert np.array_equal(scaled.centroids, c * base.centroids)

    def test_assignment_optimality_at_termination(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            points = rng.normal(size=(int(rng.integers(6, 25)), 3))
            k = int(rng.integers(2, 5))
            result = kmeans(points, k, seed=int(rng.integers(0, 100)), tol=0.0)
            assert result.converged
            d2 = ((points[:, None, :] - result.centroids[None, :, :]) ** 2).sum(axis=2)
            assert np.array_equal(d2.argmin(axis=1), result.assignments)

    def test_centroids_are_member_means(self):
        rng = np.random.default_rng(6)
        points = rng.normal(size=(30, 4))
        result = kmeans(points, 5, seed=3)
        for j in range(5):
            members = points[result.assignments == j]
            assert np.allclose(result.centroids[j], members.mean(axis=0), atol=1e-9)

    def test_sse_consistent(self):
        rng = np.random.default_rng(7)
        points = rng.normal(size=(20, 3))
        result = kmeans(points, 4, seed=1)
        direct = ((points - result.centroids[result.assignments]) ** 2).sum()
        assert result.sse == pytest.approx(direct, abs=1e-9)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(25, 6))
        a = kmeans(points, 4, seed=123)
        b = kmeans(points, 4, seed=123)
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.sse == b.sse
