"""Case corpus and dispute-embedding loaders, plus corpus statistics."""

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

ARTICLE_OVERFLOW = 25
CODE_OVERFLOW = 8
DISPUTE_OVERFLOW = 11


@dataclass(frozen=True, order=True)
class ArticleRef:
    code_id: str
    article_id: str

    def __str__(self):
        return f"{self.code_id}/{self.article_id}"


def parse_article_ref(raw: str) -> ArticleRef:
    """Parse a ``CODE/ARTICLE`` citation string.

    Surrounding whitespace on either side of the separator is trimmed and
    the code is upper-cased; article sub-numbers such as ``229-1`` are kept
    verbatim.
    """
    if not isinstance(raw, str):
        raise ParseError(f"article reference must be a string, got {raw!r}")
    parts = raw.split("/")
    if len(parts) != 2:
        raise ParseError(f"malformed article reference {raw!r}: expected exactly one '/'")
    code, art = parts[0].strip().upper(), parts[1].strip()
    if not code or not art:
        raise ParseError(f"malformed article reference {raw!r}: empty code or article")
    if any(c.isspace() for c in code + art):
        raise ParseError(f"malformed article reference {raw!r}: embedded whitespace")
    return ArticleRef(code, art)


@dataclass(frozen=True)
class Case:
    case_id: str
    cited_articles: FrozenSet[ArticleRef]
    dispute_items: Tuple[str, ...] = ()
    year: Optional[int] = None
    court: Optional[str] = None
    cause_of_action: Optional[str] = None


@dataclass(frozen=True)
class CaseSet:
    cases: Tuple[Case, ...]
    duplicate_citations: int = 0
    _by_id: Dict[str, Case] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for c in self.cases:
            if c.case_id in by_id:
                raise ValidationError(f"duplicate case_id {c.case_id!r}")
            by_id[c.case_id] = c
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self):
        return len(self.cases)

    def __iter__(self) -> Iterator[Case]:
        return iter(self.cases)

    def __contains__(self, case_id):
        return case_id in self._by_id

    def __getitem__(self, case_id: str) -> Case:
        return self._by_id[case_id]

    def ids(self) -> List[str]:
        return [c.case_id for c in self.cases]

    def subset(self, case_ids) -> "CaseSet":
        return CaseSet(tuple(self._by_id[i] for i in case_ids))


def _case_from_obj(obj, lineno: int) -> Tuple[Case, int]:
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected a JSON object")
    case_id = obj.get("case_id")
    if not isinstance(case_id, str) or not case_id.strip():
        raise ParseError(f"line {lineno}: case_id must be a non-empty string")
    raw_articles = obj.get("cited_articles", [])
    items = obj.get("dispute_items", [])
    if not isinstance(raw_articles, list) or not isinstance(items, list):
        raise ParseError(f"line {lineno}: cited_articles and dispute_items must be lists")
    refs = []
    for raw in raw_articles:
        try:
            refs.append(parse_article_ref(raw))
        except ParseError as e:
            raise ParseError(f"line {lineno}: {e}") from None
    for it in items:
        if not isinstance(it, str) or not it.strip():
            raise ParseError(f"line {lineno}: dispute items must be non-empty strings")
    year = obj.get("year")
    if year is not None and (not isinstance(year, int) or isinstance(year, bool)):
        raise ParseError(f"line {lineno}: year must be an integer")
    articles = frozenset(refs)
    case = Case(
        case_id=case_id,
        cited_articles=articles,
        dispute_items=tuple(items),
        year=year,
        court=obj.get("court"),
        cause_of_action=obj.get("cause_of_action"),
    )
    return case, len(refs) - len(articles)


def load_cases(path) -> CaseSet:
    """Read a ``cases.jsonl`` file into a validated CaseSet."""
    cases = []
    seen = {}
    dupes = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from None
            case, n_dup = _case_from_obj(obj, lineno)
            if case.case_id in seen:
                raise ValidationError(
                    f"{path}: duplicate case_id {case.case_id!r} on lines {seen[case.case_id]} and {lineno}"
                )
            seen[case.case_id] = lineno
            dupes += n_dup
            cases.append(case)
    if dupes:
        log.warning("%s: dropped %d duplicate citation(s)", path, dupes)
    return CaseSet(tuple(cases), duplicate_citations=dupes)


class EmbeddingStore:
    """Dispute-item vectors indexed by (case_id, item_index)."""

    def __init__(self, vectors: Dict[Tuple[str, int], np.ndarray], dim: int):
        self._vectors = vectors
        self.dim = dim
        per_case: Dict[str, List[int]] = {}
        for cid, idx in vectors:
            per_case.setdefault(cid, []).append(idx)
        self._items = {cid: sorted(ix) for cid, ix in per_case.items()}
        self._matrices: Dict[str, np.ndarray] = {}

    def __len__(self):
        return len(self._vectors)

    def __getitem__(self, key: Tuple[str, int]) -> np.ndarray:
        return self._vectors[key]

    def __contains__(self, key):
        return key in self._vectors

    def item_indices(self, case_id: str) -> List[int]:
        return list(self._items.get(case_id, []))

    def matrix(self, case_id: str) -> np.ndarray:
        """Stacked vectors of one case, rows in item_index order."""
        if case_id not in self._items:
            raise ValidationError(f"no embedded dispute items for case {case_id!r}")
        m = self._matrices.get(case_id)
        if m is None:
            m = np.vstack([self._vectors[(case_id, i)] for i in self._items[case_id]])
            m.setflags(write=False)
            self._matrices[case_id] = m
        return m


def load_embeddings(path, cases: CaseSet) -> EmbeddingStore:
    vectors = {}
    dim = None
    dim_line = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from None
            cid = obj.get("case_id")
            idx = obj.get("item_index")
            vec = obj.get("vector")
            if cid not in cases:
                raise ValidationError(f"{path}: line {lineno}: case_id {cid!r} not in case set")
            if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
                raise ValidationError(f"{path}: line {lineno}: item_index must be a non-negative integer")
            n_items = len(cases[cid].dispute_items)
            if idx >= n_items:
                raise ValidationError(
                    f"{path}: line {lineno}: item_index {idx} out of range for case {cid!r} "
                    f"with {n_items} dispute item(s)"
                )
            if not isinstance(vec, list) or not vec:
                raise ValidationError(f"{path}: line {lineno}: vector must be a non-empty list")
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValidationError(f"{path}: line {lineno}: vector must be a flat list of finite numbers")
            if dim is None:
                dim, dim_line = arr.size, lineno
            elif arr.size != dim:
                raise ValidationError(
                    f"{path}: line {lineno}: dimension {arr.size} ≠ {dim} (established on line {dim_line})"
                )
            if (cid, idx) in vectors:
                raise ValidationError(f"{path}: line {lineno}: duplicate entry for ({cid!r}, {idx})")
            arr.setflags(write=False)
            vectors[(cid, idx)] = arr
    return EmbeddingStore(vectors, dim or 0)


@dataclass
class CorpusStats:
    n_cases: int
    n_distinct_articles: int
    n_distinct_codes: int
    articles_per_case_histogram: Dict[str, int]
    codes_per_case_histogram: Dict[str, int]
    mean_articles_per_case: float
    mean_codes_per_case: float
    disputes_per_case_histogram: Dict[str, int]
    mean_disputes_per_case: float
    dispute_char_stats: Dict[str, float]
    duplicate_citations: int = 0

    def to_dict(self):
        return dict(self.__dict__)


def _bucketed(values, lo: int, overflow: int) -> Dict[str, int]:
    hist = {str(b): 0 for b in range(lo, overflow)}
    hist[f"{overflow}+"] = 0
    for v in values:
        hist[f"{overflow}+" if v >= overflow else str(v)] += 1
    return hist


def corpus_stats(cases: CaseSet) -> CorpusStats:
    """Summarize citation and dispute-item counts per case.

    Articles-per-case buckets run 0..24 plus "25+"; codes-per-case buckets
    run 0..7 plus "8+" (bucket "0" only ever holds cases citing nothing).
    """
    if len(cases) == 0:
        raise ValidationError("corpus_stats needs at least one case")
    n = len(cases)
    n_articles = [len(c.cited_articles) for c in cases]
    n_codes = [len({a.code_id for a in c.cited_articles}) for c in cases]
    n_disputes = [len(c.dispute_items) for c in cases]
    chars = [sum(len(t) for t in c.dispute_items) for c in cases]
    all_articles = set().union(*(c.cited_articles for c in cases))
    return CorpusStats(
        n_cases=n,
        n_distinct_articles=len(all_articles),
        n_distinct_codes=len({a.code_id for a in all_articles}),
        articles_per_case_histogram=_bucketed(n_articles, 0, ARTICLE_OVERFLOW),
        codes_per_case_histogram=_bucketed(n_codes, 0, CODE_OVERFLOW),
        mean_articles_per_case=sum(n_articles) / n,
        mean_codes_per_case=sum(n_codes) / n,
        disputes_per_case_histogram=_bucketed(n_disputes, 0, DISPUTE_OVERFLOW),
        mean_disputes_per_case=sum(n_disputes) / n,
        dispute_char_stats={"mean": sum(chars) / n, "max": max(chars)},
        duplicate_citations=cases.duplicate_citations,
    )


def pair_count(n: int) -> int:
    if n < 0:
        raise ValueError("n must be non-negative")
    return math.comb(n, 2)
