"""Grouping features (perspective encoding) for cited articles.

A scheme is an ordered list of rules; the first rule whose matcher fits an
article decides its grouping key.  Matchers are either an exact article
(``LSL/2``) or a whole code (``TA/*``).  Articles matched by no rule fall
back to the scheme default: ``identity`` keeps the article as its own key,
``drop`` gives it no key at all, so it never matches anything (it still
counts toward set sizes).
"""

import json
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

from .corpus import ArticleRef, parse_article_ref
from .errors import ValidationError

IDENTITY = "identity"
DROP = "drop"


@dataclass(frozen=True, order=True)
class GroupKey:
    kind: str  # "article" | "group"
    value: str

    @classmethod
    def article(cls, ref: ArticleRef) -> "GroupKey":
        return cls("article", str(ref))

    @classmethod
    def group(cls, name: str) -> "GroupKey":
        return cls("group", name)

    def __str__(self):
        return self.value if self.kind == "article" else f"<{self.value}>"


@dataclass(frozen=True)
class GroupRule:
    code_id: str
    article_id: Optional[str]  # None means every article of code_id
    target: str  # IDENTITY or a group name

    def matches(self, a: ArticleRef) -> bool:
        return a.code_id == self.code_id and (self.article_id is None or a.article_id == self.article_id)


@dataclass(frozen=True)
class GroupingScheme:
    rules: Tuple[GroupRule, ...] = ()
    default: str = IDENTITY
    code_filter: Optional[FrozenSet[str]] = None

    @property
    def is_identity(self) -> bool:
        return self.default == IDENTITY and all(r.target == IDENTITY for r in self.rules)

    def to_config(self) -> dict:
        cfg = {
            "default": self.default,
            "rules": [
                {"match": f"{r.code_id}/{r.article_id or '*'}", "group": r.target} for r in self.rules
            ],
        }
        if self.code_filter is not None:
            cfg["code_filter"] = sorted(self.code_filter)
        return cfg


IDENTITY_SCHEME = GroupingScheme()


def _parse_matcher(raw: str) -> Tuple[str, Optional[str]]:
    if isinstance(raw, str) and raw.strip().endswith("/*"):
        code = raw.strip()[:-2].strip().upper()
        if not code or "/" in code or any(c.isspace() for c in code):
            raise ValidationError(f"bad wildcard matcher {raw!r}")
        return code, None
    ref = parse_article_ref(raw)
    return ref.code_id, ref.article_id


def compile_scheme(config=None) -> GroupingScheme:
    """Build a GroupingScheme from its JSON-style description.

    >>> s = compile_scheme({"rules": [{"match": "TA/*", "group": "TA"}]})
    >>> group_of(parse_article_ref("ta/5"), s)
    GroupKey(kind='group', value='TA')
    """
    config = config or {}
    default = config.get("default", IDENTITY)
    if default not in (IDENTITY, DROP):
        raise ValidationError(f"scheme default must be 'identity' or 'drop', got {default!r}")
    rules = []
    exact_seen = set()
    for k, rule in enumerate(config.get("rules", [])):
        if not isinstance(rule, dict) or "match" not in rule:
            raise ValidationError(f"rule {k}: expected an object with a 'match' field")
        code, art = _parse_matcher(rule["match"])
        target = rule.get("group", IDENTITY)
        if not isinstance(target, str) or not target.strip():
            raise ValidationError(f"rule {k}: empty group id")
        target = target.strip()
        if art is not None:
            if (code, art) in exact_seen:
                raise ValidationError(f"rule {k}: duplicate exact rule for {code}/{art}")
            exact_seen.add((code, art))
        rules.append(GroupRule(code, art, target))
    code_filter = config.get("code_filter")
    if code_filter is not None:
        code_filter = frozenset(str(c).strip().upper() for c in code_filter)
    return GroupingScheme(tuple(rules), default, code_filter)


def load_scheme(path) -> GroupingScheme:
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: malformed JSON ({e.msg})") from None
    return compile_scheme(cfg)


def apply_filter(articles: Iterable[ArticleRef], scheme: GroupingScheme) -> FrozenSet[ArticleRef]:
    if scheme.code_filter is None:
        return frozenset(articles)
    return frozenset(a for a in articles if a.code_id in scheme.code_filter)


def group_of(a: ArticleRef, scheme: GroupingScheme) -> Optional[GroupKey]:
    """Grouping key of one article; None when the scheme drops it."""
    for rule in scheme.rules:
        if rule.matches(a):
            return GroupKey.article(a) if rule.target == IDENTITY else GroupKey.group(rule.target)
    return GroupKey.article(a) if scheme.default == IDENTITY else None


def encode(articles: Iterable[ArticleRef], scheme: GroupingScheme) -> FrozenSet[GroupKey]:
    """Collapsed (perspective) encoding: the set of keys a case's citations map to."""
    keys = (group_of(a, scheme) for a in apply_filter(articles, scheme))
    return frozenset(k for k in keys if k is not None)
