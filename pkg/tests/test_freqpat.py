import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import itemsets_oracle
from tmids.errors import ValidationError
from tmids.freqpat import apriori
from tmids.ingest import FrequencyMatrix, SyscallVocabulary


def binary(rows, tokens=None, mode="binary"):
    x = np.asarray(rows, dtype=float).reshape(len(rows), -1)
    tokens = tokens or tuple(chr(ord("A") + j) for j in range(x.shape[1]))
    return FrequencyMatrix(tuple(f"r{i}" for i in range(len(x))), SyscallVocabulary(tokens),
                           mode, x)


THREE = binary([[1, 1], [1, 0], [1, 1]])


def test_three_row_example():
    out = apriori(THREE, 0.6)
    got = [(s.items, s.count, round(s.support, 3)) for s in out.itemsets]
    assert got == [(("A",), 3, 1.0), (("B",), 2, 0.667), (("A", "B"), 2, 0.667)]


def test_unanimous():
    assert [s.items for s in apriori(THREE, 1.0).itemsets] == [("A",)]


def test_errors():
    with pytest.raises(ValidationError, match="binary"):
        apriori(binary([[2, 0]], mode="count"), 0.5)
    with pytest.raises(ValidationError):
        apriori(THREE, 0.0)
    with pytest.raises(ValidationError):
        apriori(THREE, 1.5)
    empty = FrequencyMatrix((), SyscallVocabulary(("A",)), "binary", np.zeros((0, 1)))
    with pytest.raises(ValidationError, match="empty"):
        apriori(empty, 0.5)


def test_render_and_dict():
    out = apriori(THREE, 0.6)
    assert out.render().splitlines()[1] == "{A}\t3\t1.000000"
    assert out.to_dict()["itemsets"][2]["items"] == ["A", "B"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 10), st.integers(1, 8),
       st.floats(0.05, 1.0))
def test_oracle_and_closure(seed, n, m, min_support):
    rng = np.random.default_rng(seed)
    x = (rng.random((n, m)) < 0.6).astype(float)
    out = apriori(binary(x.tolist()), min_support)
    found = out.as_map()
    assert found == itemsets_oracle(x.tolist(), [chr(65 + j) for j in range(m)], min_support)
    for s, c in found.items():
        assert c / n >= min_support
        for t, d in found.items():
            if s <= t:
                assert c >= d
        for item in s:
            if len(s) > 1:
                assert s - {item} in found
    keys = [(len(s.items), s.items) for s in out.itemsets]
    assert keys == sorted(keys)
