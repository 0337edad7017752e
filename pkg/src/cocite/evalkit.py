"""Similar-case recommendation evaluation: query selection, ranking,
precision@N, NDCG@N and a binomial chance baseline.

NDCG uses binary gains, a log2(rank + 1) discount and an ideal DCG built
from min(N, R) leading relevant items, R being the number of relevant
candidates in the whole pool.  Reported precision is the mean over
queries of per-query precision.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .corpus import CaseSet, EmbeddingStore
from .errors import ValidationError
from .labeler import LabelThresholds, LabeledPair, label_eval
from .rng import StageRng
from .sampler import distance_matrix

DISTANCE_ASC = "distance-ascending"
SCORE_DESC = "score-descending"
DEFAULT_NS = (5, 10, 15, 20, 25, 30)


@dataclass(frozen=True)
class QueryFilter:
    min_similar_fraction: float = 0.30
    max_similar_fraction: float = 0.40
    max_queries: Optional[int] = 30

    def __post_init__(self):
        if not 0 <= self.min_similar_fraction <= self.max_similar_fraction <= 1:
            raise ValidationError("query filter needs 0 <= min <= max <= 1")
        if self.max_queries is not None and self.max_queries < 1:
            raise ValidationError("max_queries must be positive")


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: Tuple[Tuple[str, float], ...]
    orientation: str

    @property
    def ids(self) -> List[str]:
        return [c for c, _ in self.entries]


# -- scorers -----------------------------------------------------------------

class MeanEuclideanScorer:
    """Mean Euclidean distance over all cross pairs of dispute-item vectors."""

    orientation = DISTANCE_ASC

    def __init__(self, embeddings: EmbeddingStore):
        self.embeddings = embeddings

    def _matrix(self, case_id):
        if not self.embeddings.item_indices(case_id):
            raise ValidationError(f"no embedded dispute items for case {case_id!r}")
        return self.embeddings.matrix(case_id)

    def __call__(self, query_id: str, candidate_id: str) -> float:
        D = distance_matrix(self._matrix(query_id), self._matrix(candidate_id))
        # fsum is order-independent, which makes the score exactly symmetric
        return math.fsum(D.ravel().tolist()) / D.size


def mean_euclidean_score(query, candidate, embeddings: EmbeddingStore) -> float:
    q = getattr(query, "case_id", query)
    c = getattr(candidate, "case_id", candidate)
    return MeanEuclideanScorer(embeddings)(q, c)


class ExternalScorer:
    """Precomputed higher-is-better scores keyed by (query_id, candidate_id)."""

    orientation = SCORE_DESC

    def __init__(self, scores: Dict[Tuple[str, str], float]):
        self.scores = scores

    def __len__(self):
        return len(self.scores)

    def queries(self) -> Set[str]:
        return {q for q, _ in self.scores}

    def __call__(self, query_id: str, candidate_id: str) -> float:
        try:
            return self.scores[(query_id, candidate_id)]
        except KeyError:
            raise ValidationError(f"external scores lack pair ({query_id!r}, {candidate_id!r})") from None

    def check_pool(self, pool_ids: Iterable[str]) -> None:
        pool = set(pool_ids)
        for q, c in self.scores:
            for role, cid in (("query", q), ("candidate", c)):
                if cid not in pool:
                    raise ValidationError(f"external scores: {role} {cid!r} is not in the evaluation pool")


def ingest_external_scores(path, pool_ids: Optional[Iterable[str]] = None) -> ExternalScorer:
    """Read ``query_id<TAB>candidate_id<TAB>score`` rows (an optional header
    starting with ``query_id`` is skipped)."""
    scores: Dict[Tuple[str, str], float] = {}
    first_line: Dict[Tuple[str, str], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            f = line.split("\t")
            if lineno == 1 and f[0] == "query_id":
                continue
            if len(f) != 3:
                raise ValidationError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            try:
                val = float(f[2])
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: bad score {f[2]!r}") from None
            if not math.isfinite(val):
                raise ValidationError(f"{path}: line {lineno}: non-finite score")
            key = (f[0], f[1])
            if key in scores:
                raise ValidationError(
                    f"{path}: duplicate row for ({f[0]!r}, {f[1]!r}) on lines {first_line[key]} and {lineno}"
                )
            scores[key] = val
            first_line[key] = lineno
    scorer = ExternalScorer(scores)
    if pool_ids is not None:
        scorer.check_pool(pool_ids)
    return scorer


# -- ranking and metrics -----------------------------------------------------

def rank_candidates(query_id: str, pool_ids: Iterable[str], scorer) -> RankedList:
    scored = [(c, scorer(query_id, c)) for c in pool_ids if c != query_id]
    if scorer.orientation == DISTANCE_ASC:
        scored.sort(key=lambda e: (e[1], e[0]))
    elif scorer.orientation == SCORE_DESC:
        scored.sort(key=lambda e: (-e[1], e[0]))
    else:
        raise ValueError(f"unknown orientation {scorer.orientation!r}")
    return RankedList(query_id, tuple(scored), scorer.orientation)


def _rel_vector(ranked, relevant) -> List[int]:
    ids = ranked.ids if isinstance(ranked, RankedList) else list(ranked)
    return [1 if c in relevant else 0 for c in ids]


def precision_at(ranked, relevant: Set[str], N: int) -> float:
    """Fraction of the top N candidates that are relevant."""
    rel = _rel_vector(ranked, relevant)
    if not 1 <= N <= len(rel):
        raise ValidationError(f"N={N} outside 1..{len(rel)}")
    return sum(rel[:N]) / N


def ndcg_at(ranked, relevant: Set[str], N: int) -> float:
    rel = _rel_vector(ranked, relevant)
    if N < 1:
        raise ValidationError("N must be >= 1")
    R = sum(rel)
    if R == 0:
        raise ValidationError("NDCG undefined: no relevant candidate in the pool")
    dcg = sum(r / math.log2(i + 2) for i, r in enumerate(rel[:N]))
    idcg = sum(1 / math.log2(i + 2) for i in range(min(N, R)))
    return dcg / idcg


# -- binomial chance baseline ------------------------------------------------

def _log_pmf(n: int, k: int, p: float) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + k * math.log(p) + (n - k) * math.log1p(-p))


def binom_pmf(n: int, k: int, p: float) -> float:
    if not 0 <= k <= n or not 0 < p < 1:
        raise ValueError("need 0 <= k <= n and 0 < p < 1")
    return math.exp(_log_pmf(n, k, p))


def binom_tail(n: int, k: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed in log space."""
    if not 0 <= k <= n or not 0 < p < 1:
        raise ValueError("need 0 <= k <= n and 0 < p < 1")
    logs = [_log_pmf(n, j, p) for j in range(k, n + 1)]
    top = max(logs)
    return min(1.0, math.exp(top) * math.fsum(math.exp(x - top) for x in logs))


def binomial_baseline(n: int, k: int, p_low: float = 0.3, p_high: float = 0.4) -> dict:
    return {
        "n": n,
        "k": k,
        "p_low": {"p": p_low, "pmf": binom_pmf(n, k, p_low), "tail": binom_tail(n, k, p_low)},
        "p_high": {"p": p_high, "pmf": binom_pmf(n, k, p_high), "tail": binom_tail(n, k, p_high)},
    }


# -- protocol ----------------------------------------------------------------

class Relevance:
    """Binary eval relevance among pool cases, from labeled pair scores.

    Pairs missing from the input count as not relevant.
    """

    def __init__(self, pool_ids: Iterable[str], pairs: Iterable[LabeledPair],
                 thresholds: LabelThresholds = LabelThresholds()):
        self.pool = sorted(set(pool_ids))
        members = set(self.pool)
        self._rel: Dict[str, Set[str]] = {c: set() for c in self.pool}
        for p in pairs:
            if p.case_i in members and p.case_j in members and label_eval(p.score, thresholds):
                self._rel[p.case_i].add(p.case_j)
                self._rel[p.case_j].add(p.case_i)

    def relevant(self, query_id: str) -> Set[str]:
        return self._rel[query_id]

    def fraction(self, query_id: str) -> float:
        return len(self._rel[query_id]) / (len(self.pool) - 1)


def select_queries(relevance: Relevance, qfilter: QueryFilter = QueryFilter(), seed: int = 0) -> List[str]:
    fractions = {c: relevance.fraction(c) for c in relevance.pool}
    eligible = [c for c in relevance.pool
                if qfilter.min_similar_fraction <= fractions[c] <= qfilter.max_similar_fraction]
    if not eligible:
        qs = np.quantile(list(fractions.values()), [0, 0.25, 0.5, 0.75, 1]).round(4).tolist()
        raise ValidationError(
            f"no query case has a similar fraction in [{qfilter.min_similar_fraction}, "
            f"{qfilter.max_similar_fraction}]; observed min/q1/median/q3/max = {qs}"
        )
    if qfilter.max_queries is not None and len(eligible) > qfilter.max_queries:
        eligible = sorted(StageRng(seed, "queries").sample(eligible, qfilter.max_queries))
    return eligible


@dataclass
class EvalReport:
    rows: List[dict]
    n_queries: int
    pool_size: int
    query_ids: List[str]
    orientation: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "n_queries": self.n_queries,
            "pool_size": self.pool_size,
            "orientation": self.orientation,
            "query_ids": self.query_ids,
            **self.metadata,
        }


def eval_report(relevance: Relevance, scorer, qfilter: QueryFilter = QueryFilter(),
                Ns: Sequence[int] = DEFAULT_NS, seed: int = 0,
                query_ids: Optional[Sequence[str]] = None) -> EvalReport:
    """Average per-query precision@N and NDCG@N over the selected queries."""
    Ns = sorted(set(int(n) for n in Ns))
    pool = relevance.pool
    if Ns and Ns[-1] > len(pool) - 1:
        raise ValidationError(f"top-N {Ns[-1]} exceeds the {len(pool) - 1} candidates per query")
    if query_ids is None:
        query_ids = select_queries(relevance, qfilter, seed)
    prec = {n: [] for n in Ns}
    ndcg = {n: [] for n in Ns}
    for q in query_ids:
        ranked = rank_candidates(q, pool, scorer)
        rel = relevance.relevant(q)
        for n in Ns:
            prec[n].append(precision_at(ranked, rel, n))
            ndcg[n].append(ndcg_at(ranked, rel, n))
    rows = [
        {"topN": n, "precision": round(math.fsum(prec[n]) / len(query_ids), 4),
         "ndcg": round(math.fsum(ndcg[n]) / len(query_ids), 4)}
        for n in Ns
    ]
    return EvalReport(
        rows=rows, n_queries=len(query_ids), pool_size=len(pool), query_ids=list(query_ids),
        orientation=scorer.orientation,
        metadata={"precision_aggregation": "mean_over_queries",
                  "ndcg_convention": "binary gain, log2(rank+1) discount, IDCG over min(N, R)"},
    )
