import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cocite.corpus import CaseSet, EmbeddingStore
from cocite.errors import ValidationError
from cocite.labeler import Label, LabeledPair
from cocite.sampler import (SamplerConfig, distance_matrix, emit_trainset, euclidean,
                            sample_case_pairs, select_dispute_pairs)
from conftest import make_case


def store(vectors):
    """vectors: {case_id: [[...], ...]} -> EmbeddingStore."""
    flat = {(c, i): np.asarray(v, dtype=float) for c, vs in vectors.items() for i, v in enumerate(vs)}
    return EmbeddingStore(flat, len(next(iter(flat.values()))))


class TestEuclidean:
    def test_345(self):
        assert euclidean([0, 0], [3, 4]) == 5.0

    def test_self(self):
        assert euclidean([1.5, -2], [1.5, -2]) == 0.0

    def test_1d(self):
        assert euclidean([1], [4]) == 3.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            euclidean([1, 2], [1])

    @settings(max_examples=50)
    @given(st.integers(1, 40), st.integers(0, 2**31))
    def test_matrix_bit_identical(self, d, seed):
        rng = np.random.default_rng(seed)
        U, V = rng.normal(size=(3, d)), rng.normal(size=(4, d))
        D = distance_matrix(U, V)
        for i, j in itertools.product(range(3), range(4)):
            assert D[i, j] == euclidean(U[i], V[j])
            assert distance_matrix(V, U)[j, i] == D[i, j]


def pool(n_sim, n_not, n_exc=0):
    out = [LabeledPair("a", f"s{i:03d}", 1.5, Label.SIMILAR) for i in range(n_sim)]
    out += [LabeledPair("a", f"n{i:03d}", 0.1, Label.NOT_SIMILAR) for i in range(n_not)]
    out += [LabeledPair("a", f"x{i:03d}", 0.7, Label.EXCLUDED) for i in range(n_exc)]
    return out


class TestSampleCasePairs:
    def test_paper_ratio(self):
        cfg = SamplerConfig(total_case_pairs=50_000, similar_fraction=0.4)
        got = sample_case_pairs(pool(21_000, 31_000, 500), cfg)
        labels = [p.label for p in got]
        assert labels.count(Label.SIMILAR) == 20_000 and labels.count(Label.NOT_SIMILAR) == 30_000
        assert len(set(got)) == 50_000

    def test_exhaustive(self):
        got = sample_case_pairs(pool(4, 6, 3), SamplerConfig(total_case_pairs=10))
        assert set(got) == set(pool(4, 6))

    def test_insufficient(self):
        with pytest.raises(ValidationError, match="requested 4 similar, have 2"):
            sample_case_pairs(pool(2, 20), SamplerConfig(total_case_pairs=10))

    def test_deterministic(self):
        cfg = SamplerConfig(total_case_pairs=30, seed=5)
        assert sample_case_pairs(pool(40, 40), cfg) == sample_case_pairs(list(reversed(pool(40, 40))), cfg)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            SamplerConfig(similar_fraction=1.0)
        with pytest.raises(ValidationError):
            SamplerConfig(m=0)


class TestSelectDisputePairs:
    @pytest.fixture
    def setup(self):
        cases = CaseSet((make_case("A", [], ["a0", "a1"]), make_case("B", [], ["b0", "b1"])))
        return cases, store({"A": [[0], [10]], "B": [[1], [9]]})

    def test_similar_takes_closest(self, setup):
        cases, emb = setup
        got, short = select_dispute_pairs(LabeledPair("A", "B", 2.0, Label.SIMILAR), cases, emb, 2)
        assert [(x.item_a, x.item_b, x.distance) for x in got] == [(0, 0, 1.0), (1, 1, 1.0)]
        assert (got[0].text_a, got[0].text_b) == ("a0", "b0")
        assert short == 0

    def test_not_similar_takes_farthest(self, setup):
        cases, emb = setup
        got, _ = select_dispute_pairs(LabeledPair("A", "B", 0.1, Label.NOT_SIMILAR), cases, emb, 2)
        assert [(x.item_a, x.item_b, x.distance) for x in got] == [(0, 1, 9.0), (1, 0, 9.0)]

    def test_shortfall(self):
        cases = CaseSet((make_case("A", [], ["a"]), make_case("B", [], ["b"])))
        got, short = select_dispute_pairs(LabeledPair("A", "B", 2.0, Label.SIMILAR), cases,
                                          store({"A": [[0]], "B": [[1]]}), 2)
        assert len(got) == 1 and short == 1

    def test_missing_embeddings(self):
        cases = CaseSet((make_case("A", [], ["a"]), make_case("B", [], ["b"])))
        with pytest.raises(ValidationError, match="'B'"):
            select_dispute_pairs(LabeledPair("A", "B", 2.0, Label.SIMILAR), cases, store({"A": [[0]]}), 2)

    def test_excluded_rejected(self, setup):
        cases, emb = setup
        with pytest.raises(ValidationError):
            select_dispute_pairs(LabeledPair("A", "B", 0.7, Label.EXCLUDED), cases, emb, 2)


def random_world(n_cases, seed, dim=3):
    rng = np.random.default_rng(seed)
    cases, vecs = [], {}
    for i in range(n_cases):
        k = int(rng.integers(1, 5))
        cid = f"c{i:03d}"
        cases.append(make_case(cid, [], [f"{cid}-item{j}" for j in range(k)]))
        vecs[cid] = rng.integers(0, 4, size=(k, dim)).tolist()  # small ints force ties
    return CaseSet(tuple(cases)), store(vecs)


def test_emit_counts_and_split():
    cases, emb = random_world(30, 1)
    ids = cases.ids()
    pairs = [LabeledPair(a, b, 1.5 if (i + j) % 3 == 0 else 0.2,
                         Label.SIMILAR if (i + j) % 3 == 0 else Label.NOT_SIMILAR)
             for (i, a), (j, b) in itertools.combinations(enumerate(ids), 2)]
    cfg = SamplerConfig(total_case_pairs=100, m=2, seed=3)
    sampled = sample_case_pairs(pairs, cfg)
    ts = emit_trainset(sampled, cases, emb, cfg)
    r = ts.report
    assert r["instances"] == 200 - r["shortfall"]
    assert r["train"] + r["val"] == r["instances"]
    for x in ts.train + ts.val:
        assert x.case_a != x.case_b
    glob = r["instances_by_label"]["similar"] / r["instances"]
    for split in (ts.train, ts.val):
        frac = sum(x.label == "similar" for x in split) / len(split)
        assert abs(frac - glob) <= 1 / len(split) + 1e-12


def test_single_pair_two_instances():
    cases, emb = random_world(2, 4)
    p = LabeledPair("c000", "c001", 0.1, Label.NOT_SIMILAR)
    cfg = SamplerConfig(total_case_pairs=1, m=2)
    ts = emit_trainset([p], cases, emb, cfg)
    avail = len(cases["c000"].dispute_items) * len(cases["c001"].dispute_items)
    assert len(ts.train) + len(ts.val) == min(2, avail)
