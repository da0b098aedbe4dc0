import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmids.clustering import (
    ClusterModel,
    _centroids,
    assign,
    handle_empty_clusters,
    kmeans_fit,
)
from tmids.errors import ValidationError
from tmids.similarity import FeatureStats, SimilarityMeasure

BLOBS = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])


def idsim_for(x):
    return SimilarityMeasure("idsim", FeatureStats.from_values(x))


def test_blobs_separate_under_idsim():
    m = idsim_for(BLOBS)
    for seed in range(10):
        model = kmeans_fit(BLOBS, 2, m, seed=seed)
        a = model.assignments
        assert a[0] == a[1] and a[2] == a[3] and a[0] != a[2]


def test_blob_assignment_of_new_point():
    model = kmeans_fit(BLOBS, 2, idsim_for(BLOBS), seed=0)
    b = model.assignments[2]
    point = np.array([9.9, 0.0])
    d = [model.measure.distance(point, c) for c in model.centroids]
    assert d[b] < d[1 - b]
    assert assign(point, model) == b


def test_saturated_k():
    x = np.array([[1.0, 0], [0, 1.0], [1.0, 1.0]])
    model = kmeans_fit(x, 3, SimilarityMeasure("cosine"), seed=5)
    assert sorted(model.assignments.tolist()) == [0, 1, 2]
    assert model.converged and model.iterations_run == 1


def test_single_cluster_is_mean():
    x = np.random.default_rng(1).random((9, 4))
    model = kmeans_fit(x, 1, idsim_for(x), seed=0)
    np.testing.assert_allclose(model.centroids[0], x.mean(axis=0), atol=1e-12)


@pytest.mark.parametrize("k", [0, 5])
def test_bad_k(k):
    with pytest.raises(ValidationError):
        kmeans_fit(BLOBS, k, idsim_for(BLOBS), seed=0)


def test_bad_init():
    with pytest.raises(ValidationError):
        kmeans_fit(BLOBS, 2, idsim_for(BLOBS), seed=0, init=[1, 1])


class TestAssign:
    def test_own_centroid(self):
        model = kmeans_fit(BLOBS, 2, idsim_for(BLOBS), seed=0)
        assert assign(model.centroids[1], model) == 1

    def test_tie_goes_low(self):
        stats = FeatureStats(np.zeros(2), np.ones(2))
        model = ClusterModel(2, np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), stats,
                             "cosine", 0, 1, True)
        assert assign([1.0, 1.0], model) == 0


class TestEmptyClusters:
    def test_reseeds_farthest(self):
        x = np.zeros((3, 1))
        dist = np.array([[0.1, 0.5, 0.5], [0.4, 0.5, 0.5], [0.2, 0.5, 0.5]])
        out = handle_empty_clusters(x, np.array([0, 0, 0]), dist, 3)
        assert out[1] == 1
        assert out[2] == 2
        assert sorted(out.tolist()) == [0, 1, 2]

    def test_noop(self):
        a = np.array([0, 1, 1])
        np.testing.assert_array_equal(handle_empty_clusters(np.zeros((3, 1)), a, np.zeros((3, 2)), 2), a)

    def test_tie_lower_index(self):
        dist = np.array([[0.3, 1.0], [0.3, 1.0]])
        out = handle_empty_clusters(np.zeros((2, 1)), np.array([0, 0]), dist, 2)
        assert out.tolist() == [1, 0]

    def test_degenerate_init_fit(self):
        # duplicate rows: cosine puts everything with the first centroid
        x = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        model = kmeans_fit(x, 3, SimilarityMeasure("cosine"), seed=0)
        assert sorted(model.assignments.tolist()) == [0, 1, 2]


def test_serialization_roundtrip():
    x = np.random.default_rng(2).random((10, 3))
    model = kmeans_fit(x, 3, idsim_for(x), seed=4)
    back = ClusterModel.from_dict(model.to_dict())
    assert back.to_dict() == model.to_dict()


def test_n_init_never_worse():
    from tmids.clustering import within_cluster_distance
    x = np.random.default_rng(6).random((30, 4))
    m = idsim_for(x)
    one = kmeans_fit(x, 3, m, seed=1)
    many = kmeans_fit(x, 3, m, seed=1, n_init=5)
    w = lambda mod: within_cluster_distance(x, mod.centroids, mod.assignments, m)
    assert w(many) <= w(one)


matrices = st.integers(0, 2**31 - 1).flatmap(
    lambda s: st.tuples(st.just(s), st.integers(3, 15), st.integers(1, 5), st.integers(1, 3)))


@settings(max_examples=40, deadline=None)
@given(matrices, st.sampled_from(["idsim", "cosine", "jaccard"]))
def test_fit_properties(params, kind):
    seed, n, m, k = params
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 4, size=(n, m)).astype(float)
    measure = SimilarityMeasure(kind, FeatureStats.from_values(x))
    a = kmeans_fit(x, k, measure, seed=seed, max_iter=20, tol=0.0)
    b = kmeans_fit(x, k, measure, seed=seed, max_iter=20, tol=0.0)
    assert a.to_dict() == b.to_dict()
    assert a.iterations_run <= 20
    assert set(a.assignments.tolist()) <= set(range(k))
    for c in range(k):
        idx = a.members(c)
        if idx.size:
            np.testing.assert_allclose(a.centroids[c], x[idx].mean(axis=0), atol=1e-9)
    if a.converged:
        d = measure.pairwise(x, a.centroids)
        again = handle_empty_clusters(x, np.argmin(d, axis=1), d, k)
        np.testing.assert_array_equal(again, a.assignments)
        np.testing.assert_allclose(_centroids(x, again, k, a.centroids), a.centroids, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((12, 3))
    init = [0, 5, 9]
    perm = rng.permutation(12)
    inv = np.argsort(perm)
    measure = idsim_for(x)
    a = kmeans_fit(x, 3, measure, seed=0, init=init)
    b = kmeans_fit(x[perm], 3, measure, seed=0, init=[int(inv[i]) for i in init])
    np.testing.assert_array_equal(b.assignments, a.assignments[perm])
