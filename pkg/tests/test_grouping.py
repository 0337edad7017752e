import pytest
from hypothesis import given, strategies as st

from cocite.corpus import ArticleRef, parse_article_ref
from cocite.errors import ValidationError
from cocite.grouping import GroupKey, apply_filter, compile_scheme, encode, group_of
from conftest import refs

TA_SCHEME = {"rules": [{"match": "TA/*", "group": "TA"}], "default": "identity"}


def test_ta_wildcard_groups_teachers_act():
    s = compile_scheme(TA_SCHEME)
    assert group_of(parse_article_ref("TA/5"), s) == GroupKey.group("TA")
    assert group_of(parse_article_ref("LSL/1"), s) == GroupKey.article(ArticleRef("LSL", "1"))


def test_perspective_encoding(paper_q, paper_x):
    s = compile_scheme(TA_SCHEME)
    assert {str(k) for k in encode(paper_q, s)} == {"LSL/1", "LSL/3", "<TA>"}
    assert {str(k) for k in encode(paper_x, s)} == {"LSL/1", "LSL/2", "<TA>"}


def test_empty_rules_is_identity():
    s = compile_scheme({"rules": [], "default": "identity"})
    assert s.is_identity
    a = ArticleRef("CIV", "229")
    assert group_of(a, s) == GroupKey.article(a)


def test_first_match_wins():
    s = compile_scheme({"rules": [{"match": "LSL/2", "group": "PENSION"}, {"match": "LSL/*", "group": "LSL"}]})
    assert group_of(ArticleRef("LSL", "2"), s) == GroupKey.group("PENSION")
    assert group_of(ArticleRef("LSL", "3"), s) == GroupKey.group("LSL")


def test_duplicate_exact_rule_rejected():
    with pytest.raises(ValidationError, match="duplicate exact rule"):
        compile_scheme({"rules": [{"match": "LSL/2", "group": "A"}, {"match": "lsl/2", "group": "B"}]})


def test_empty_group_id_rejected():
    with pytest.raises(ValidationError, match="empty group id"):
        compile_scheme({"rules": [{"match": "LSL/2", "group": " "}]})


def test_bad_default_rejected():
    with pytest.raises(ValidationError):
        compile_scheme({"default": "collapse"})


def test_drop_default():
    s = compile_scheme({"default": "drop", "rules": [{"match": "LSL/*", "group": "identity"}]})
    assert group_of(ArticleRef("TA", "1"), s) is None
    assert group_of(ArticleRef("LSL", "1"), s) == GroupKey.article(ArticleRef("LSL", "1"))


def test_keys_of_different_kinds_never_equal():
    assert GroupKey.article(ArticleRef("TA", "5")) != GroupKey.group("TA/5")


class TestFilter:
    def test_keeps_allowed_codes(self):
        s = compile_scheme({"code_filter": ["lsl"]})
        assert apply_filter(refs("LSL/2", "TA/5"), s) == refs("LSL/2")

    def test_no_filter_is_identity(self):
        s = compile_scheme({})
        assert apply_filter(refs("LSL/2", "TA/5"), s) == refs("LSL/2", "TA/5")

    def test_may_empty_the_set(self):
        s = compile_scheme({"code_filter": ["LSL"]})
        assert apply_filter(refs("TA/5"), s) == frozenset()


articles = st.builds(ArticleRef, st.sampled_from(["LSL", "TA", "CIV", "LPA"]),
                     st.integers(1, 12).map(str))


@given(st.frozensets(articles, max_size=15), st.frozensets(st.sampled_from(["LSL", "TA", "CIV", "LPA"])))
def test_filter_idempotent(A, codes):
    s = compile_scheme({"code_filter": sorted(codes)})
    once = apply_filter(A, s)
    assert apply_filter(once, s) == once


@given(articles)
def test_group_of_total_and_pure(a):
    s = compile_scheme(TA_SCHEME)
    assert group_of(a, s) == group_of(a, s)
    assert group_of(a, compile_scheme({})) == GroupKey.article(a)
