import pytest
from hypothesis import given, strategies as st

from cocite.errors import ValidationError
from cocite.labeler import (CasesetPartition, Label, LabelThresholds, label_eval, label_pairs_tsv,
                            label_training, partition_cases, read_labels, verify_disjoint)


@pytest.mark.parametrize("score,label", [
    (1.2, Label.SIMILAR), (0.7, Label.EXCLUDED), (0.3, Label.NOT_SIMILAR),
    (0.5, Label.EXCLUDED), (1.0, Label.EXCLUDED), (0.0, Label.NOT_SIMILAR),
])
def test_training_regime(score, label):
    assert label_training(score) is label


@pytest.mark.parametrize("score,rel", [(1.0, True), (0.999, False), (0.0, False), (3.2, True)])
def test_eval_regime(score, rel):
    assert label_eval(score) is rel


def test_thresholds_validated():
    with pytest.raises(ValidationError):
        LabelThresholds(train_lo=1.2, train_hi=1.0)
    with pytest.raises(ValidationError):
        LabelThresholds(eval_cut=0)


@given(st.floats(0, 5, allow_nan=False))
def test_training_regime_total(score):
    lab = label_training(score)
    if lab is not Label.EXCLUDED:
        assert not 0.5 <= score <= 1.0
    assert label_training(score) is lab


def test_label_file_round_trip(tmp_path):
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(
        "case_i\tcase_j\tdice\tdice2\tg_dice\tg_dice_weighted\n"
        "a\tb\t0.5\t0.3\t0.5\t1.200000\n"
        "a\tc\t0.5\t0.3\t0.5\t0.700000\n"
        "b\tc\t0.5\t0.3\t0.5\t0.100000\n"
    )
    out = tmp_path / "labels.tsv"
    counts = label_pairs_tsv(pairs, out, LabelThresholds())
    assert counts == {"similar": 1, "not_similar": 1, "excluded": 1}
    got = list(read_labels(out))
    assert [(p.case_i, p.case_j, p.label) for p in got] == [
        ("a", "b", Label.SIMILAR), ("a", "c", Label.EXCLUDED), ("b", "c", Label.NOT_SIMILAR)]


class TestPartition:
    ids = [f"c{i}" for i in range(10)]

    def test_sizes_and_disjoint(self):
        p = partition_cases(self.ids, [5, 3, 2], seed=7)
        assert (len(p.embedder), len(p.recommender), len(p.eval)) == (5, 3, 2)
        assert verify_disjoint(p) == {}
        assert set(p.embedder + p.recommender + p.eval) <= set(self.ids)

    def test_reproducible(self):
        assert partition_cases(self.ids, [5, 3, 2], 7) == partition_cases(list(reversed(self.ids)), [5, 3, 2], 7)

    def test_seed_matters(self):
        assert partition_cases(self.ids, [5, 3, 2], 7) != partition_cases(self.ids, [5, 3, 2], 8)

    def test_oversized(self):
        with pytest.raises(ValidationError, match="requested 24"):
            partition_cases(self.ids, [8, 8, 8], 7)

    def test_json_round_trip(self):
        p = partition_cases(self.ids, [4, 4, 2], 1)
        assert CasesetPartition.from_json(p.to_json()) == p


class TestVerifyDisjoint:
    def test_clean(self):
        assert verify_disjoint(CasesetPartition(["a"], ["b"], ["c"])) == {}

    def test_violation(self):
        v = verify_disjoint(CasesetPartition(["X", "a"], ["b"], ["X"]))
        assert v == {"X": ["embedder", "eval"]}

    def test_empty(self):
        assert verify_disjoint(CasesetPartition([], [], [])) == {}
