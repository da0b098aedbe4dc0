import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import knn_oracle
from tmids.classify import evaluate, knn_scalar, knn_scalar_batch, knn_vector
from tmids.errors import ValidationError
from tmids.ingest import FrequencyMatrix, SyscallVocabulary
from tmids.scalar_reduce import ScalarFeatureSet
from tmids.similarity import FeatureStats, SimilarityMeasure


def scalars(values, labels):
    n = len(values)
    return ScalarFeatureSet(tuple(f"s{i}" for i in range(n)), np.array(values, dtype=float),
                            tuple(labels), np.zeros(n, dtype=int), "train")


def labeled(values, labels, mode="count"):
    values = np.asarray(values, dtype=float)
    vocab = SyscallVocabulary(tuple(f"c{j}" for j in range(values.shape[1])))
    return FrequencyMatrix(tuple(f"r{i}" for i in range(len(values))), vocab, mode, values,
                           tuple(labels))


class TestKnnScalar:
    def test_nearest(self):
        assert knn_scalar(scalars([1.0, 5.0], "AB"), 1.2) == "A"

    def test_exact_value(self):
        assert knn_scalar(scalars([1.0, 5.0, 3.0], "ABC"), 3.0) == "C"

    def test_majority(self):
        assert knn_scalar(scalars([1, 2, 3], "AAB"), 2.6, k=3) == "A"

    def test_distance_tie_lower_index(self):
        assert knn_scalar(scalars([1.0, 3.0], "BA"), 2.0) == "B"

    def test_vote_tie_nearest_member(self):
        # 1 vote each; B's member is closer
        assert knn_scalar(scalars([0.0, 1.9], "AB"), 1.5, k=2) == "B"

    def test_vote_tie_class_order(self):
        assert knn_scalar(scalars([1.0, 3.0], "AB"), 2.0, k=2, class_order=["B", "A"]) == "B"

    def test_k_too_large(self):
        with pytest.raises(ValidationError):
            knn_scalar(scalars([1.0], "A"), 0.0, k=2)

    def test_unlabeled(self):
        s = ScalarFeatureSet(("a",), np.array([1.0]), (None,), np.array([0]), "test")
        with pytest.raises(ValidationError):
            knn_scalar(s, 1.0)

    def test_monotone_k(self):
        train = scalars([1, 2, 3, 10, 11, 12, 13], "AAABBBB")
        picks = [knn_scalar(train, 2.0, k=k) for k in range(1, 8)]
        # k=6 is a 3:3 tie settled by A's closer member; only k=7 outvotes A
        assert picks == ["A"] * 6 + ["B"]

    def test_batch(self):
        assert knn_scalar_batch(scalars([1.0, 5.0], "AB"), [0.0, 6.0]) == ["A", "B"]


class TestKnnVector:
    def test_self(self):
        x = labeled([[1, 0, 2], [0, 3, 0], [2, 2, 2]], "ABC")
        for kind in ("idsim", "cosine", "jaccard"):
            m = SimilarityMeasure(kind, FeatureStats.from_values(x.values))
            assert knn_vector(x, x.values[1], m) == "B"

    def test_orthogonal(self):
        x = labeled([[1, 0], [0, 1]], "AB")
        assert knn_vector(x, [5, 0], SimilarityMeasure("cosine")) == "A"

    def test_five_row_idsim(self):
        rng = np.random.default_rng(12)
        x = labeled(rng.integers(0, 5, size=(5, 4)), "AABBC")
        q = rng.integers(0, 5, size=4).astype(float)
        m = SimilarityMeasure("idsim", FeatureStats.from_values(x.values))
        d = [1 - m.similarity(q, r) for r in x.values]
        assert knn_vector(x, q, m, k=3) == knn_oracle(d, list("AABBC"), 3, list("ABC"))

    def test_errors(self):
        x = labeled([[1, 0], [0, 1]], "AB")
        with pytest.raises(ValidationError):
            knn_vector(x, [1, 0], SimilarityMeasure("cosine"), k=3)
        with pytest.raises(ValidationError):
            knn_vector(x, [1, 0, 0], SimilarityMeasure("cosine"))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_vector_order_invariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((8, 3))
    labels = list(rng.choice(list("ABC"), size=8))
    q = rng.random(3)
    m = SimilarityMeasure("cosine")
    sims = [m.similarity(q, r) for r in x]
    if len(set(sims)) < len(sims):
        return
    perm = rng.permutation(8)
    a = knn_vector(labeled(x, labels, "real"), q, m, k=3)
    b = knn_vector(labeled(x[perm], [labels[i] for i in perm], "real"), q, m, k=3)
    assert a == b


class TestEvaluate:
    def test_perfect(self):
        r = evaluate(["normal", "dos"], ["normal", "dos"])
        assert r.accuracy == 1.0 and r.false_alarm_rate == 0.0 and r.detection_rate == 1.0

    def test_degenerate(self):
        r = evaluate(["dos", "dos"], ["normal", "normal"])
        assert r.false_alarm_rate == 1.0
        assert r.detection_rate == 0.0 and not r.detection_rate_defined

    def test_two_by_two(self):
        r = evaluate(["N", "A", "A", "N"], ["N", "N", "A", "A"], normal_label="N")
        assert r.class_order == ["N", "A"]
        assert r.confusion == [[1, 1], [1, 1]]
        assert (r.accuracy, r.detection_rate, r.false_alarm_rate) == (0.5, 0.5, 0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            evaluate(["a"], ["a", "b"])

    def test_attack_confusion_counts_as_detected(self):
        r = evaluate(["probe"], ["dos"])
        assert r.detection_rate == 1.0 and r.accuracy == 0.0

    def test_render_and_dict(self):
        r = evaluate(["normal", "dos"], ["normal", "normal"])
        text = r.render()
        assert "false alarm rate 0.5000" in text and "(no attacks)" in text
        assert r.to_dict()["n_samples"] == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["normal", "dos", "probe", "r2l"]),
                          st.sampled_from(["normal", "dos", "probe", "r2l"])), min_size=1))
def test_confusion_identities(pairs):
    pred = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    r = evaluate(pred, truth)
    conf = np.array(r.confusion)
    assert conf.sum() == len(pairs)
    for i, lab in enumerate(r.class_order):
        assert conf[i].sum() == truth.count(lab)
    assert r.accuracy == np.trace(conf) / conf.sum()
    n_norm = conf[0].sum()
    assert r.false_alarm_rate == (conf[0, 1:].sum() / n_norm if n_norm else 0.0)
    n_att = conf[1:].sum()
    assert r.detection_rate == (conf[1:, 1:].sum() / n_att if n_att else 0.0)
    for v in (r.accuracy, r.detection_rate, r.false_alarm_rate, *r.per_class_recall):
        assert 0.0 <= v <= 1.0
