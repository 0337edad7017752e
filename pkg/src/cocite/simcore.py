"""DICE-family co-citation coefficients and the all-pairs engine."""

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional

import numpy as np
from scipy import sparse

from .corpus import CaseSet, pair_count
from .errors import ValidationError
from .grouping import IDENTITY_SCHEME, GroupingScheme, apply_filter, group_of

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 65_536
PAIRS_HEADER = "case_i\tcase_j\tdice\tdice2\tg_dice\tg_dice_weighted"


@dataclass(frozen=True)
class SimilarityParams:
    alpha: float = 3.0
    scheme: GroupingScheme = IDENTITY_SCHEME

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be a positive real, got {self.alpha!r}")


@dataclass(frozen=True)
class SimilarityRecord:
    case_i: str
    case_j: str
    dice: float
    dice2: float
    g_dice: float
    g_dice_weighted: float

    def tsv(self) -> str:
        return (
            f"{self.case_i}\t{self.case_j}\t{self.dice:.6f}\t{self.dice2:.6f}"
            f"\t{self.g_dice:.6f}\t{self.g_dice_weighted:.6f}"
        )


# -- scalar coefficients -----------------------------------------------------

def dice(A, B) -> float:
    A, B = set(A), set(B)
    denom = len(A) + len(B)
    if denom == 0:
        return 0.0
    return 2 * len(A & B) / denom


def dice2(A, B, alpha: float = 3.0) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    A, B = set(A), set(B)
    return dice(A, B) * len(A & B) / alpha


def participation(A, B, scheme: GroupingScheme) -> int:
    """Number of distinct articles, counted on both sides, that take part in
    at least one cross-case match of grouping keys."""
    A, B = apply_filter(A, scheme), apply_filter(B, scheme)
    ka = {a: group_of(a, scheme) for a in A}
    kb = {b: group_of(b, scheme) for b in B}
    keys_a = {k for k in ka.values() if k is not None}
    keys_b = {k for k in kb.values() if k is not None}
    return sum(1 for k in ka.values() if k in keys_b) + sum(1 for k in kb.values() if k in keys_a)


def g_dice(A, B, scheme: GroupingScheme = IDENTITY_SCHEME) -> float:
    A, B = apply_filter(A, scheme), apply_filter(B, scheme)
    denom = len(A) + len(B)
    if denom == 0:
        return 0.0
    return participation(A, B, scheme) / denom


def g_dice_weighted(A, B, scheme: GroupingScheme = IDENTITY_SCHEME, alpha: float = 3.0) -> float:
    """g_dice scaled by s/(2*alpha); equals dice2 under the identity scheme."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    A, B = apply_filter(A, scheme), apply_filter(B, scheme)
    s = participation(A, B, scheme)
    denom = len(A) + len(B)
    if denom == 0:
        return 0.0
    return s / denom * s / (2 * alpha)


# -- score histogram ---------------------------------------------------------

def _edge_label(x: float) -> str:
    return f"{round(x, 10):g}"


@dataclass
class ScoreHistogram:
    """Half-open buckets [edge, edge + width) from display_floor up to the
    overflow edge; scores below the floor are only counted."""

    bucket_width: float = 0.1
    overflow_edge: float = 1.5
    display_floor: float = 0.1
    counts: np.ndarray = field(default=None, repr=False)
    overflow: int = 0
    below_display: int = 0
    above_one: int = 0
    total: int = 0

    def __post_init__(self):
        if not self.bucket_width > 0:
            raise ValueError("bucket_width must be positive")
        if self.overflow_edge <= self.display_floor:
            raise ValueError("overflow_edge must exceed display_floor")
        k = math.ceil((self.overflow_edge - self.display_floor) / self.bucket_width - 1e-9)
        self.edges = np.array([round(self.display_floor + i * self.bucket_width, 10) for i in range(k)])
        if self.counts is None:
            self.counts = np.zeros(k, dtype=np.int64)

    def add(self, scores) -> None:
        s = np.asarray(scores, dtype=np.float64).ravel()
        self.total += s.size
        self.above_one += int(np.count_nonzero(s > 1.0))
        below = s < self.display_floor
        over = s >= self.overflow_edge
        self.below_display += int(np.count_nonzero(below))
        self.overflow += int(np.count_nonzero(over))
        mid = s[~below & ~over]
        if mid.size:
            idx = np.searchsorted(self.edges, mid, side="right") - 1
            self.counts += np.bincount(idx, minlength=self.counts.size)

    def add_below_display(self, n: int) -> None:
        self.below_display += n
        self.total += n

    @property
    def buckets(self) -> Dict[str, int]:
        out = {_edge_label(e): int(c) for e, c in zip(self.edges, self.counts)}
        out[_edge_label(self.overflow_edge) + "+"] = self.overflow
        return out

    def to_dict(self) -> dict:
        return {
            "bucket_width": self.bucket_width,
            "overflow_edge": self.overflow_edge,
            "display_floor": self.display_floor,
            "below_display": self.below_display,
            "buckets": self.buckets,
            "total": self.total,
            "fraction_below_display": round(self.below_display / self.total, 4) if self.total else 0.0,
            "fraction_above_1": round(self.above_one / self.total, 4) if self.total else 0.0,
        }


def score_histogram(scores: Iterable[float], suppressed: int = 0, bucket_width: float = 0.1,
                    overflow_edge: float = 1.5, display_floor: float = 0.1,
                    min_emit: float = 0.0) -> ScoreHistogram:
    """Histogram of emitted scores plus a count of suppressed (sub-min_emit) ones.

    Suppressed scores are placed in ``below_display``, which is only sound
    when min_emit does not exceed the display floor.
    """
    if suppressed and min_emit > display_floor:
        raise ValueError("suppressed scores cannot be bucketed when min_emit exceeds the display floor")
    h = ScoreHistogram(bucket_width, overflow_edge, display_floor)
    h.add(np.fromiter(scores, dtype=np.float64))
    h.add_below_display(suppressed)
    return h


# -- all-pairs engine --------------------------------------------------------

@dataclass
class PairBlock:
    """Emitted pairs of one contiguous chunk of the pair index space."""

    rows: np.ndarray
    cols: np.ndarray
    dice: np.ndarray
    dice2: np.ndarray
    g_dice: np.ndarray
    g_dice_weighted: np.ndarray
    evaluated: int
    all_scores: np.ndarray = field(repr=False)
    empty_pairs: int = 0


class _Incidence:
    """Sparse case x article and case x group-key matrices for one corpus."""

    def __init__(self, case_sets: List[frozenset], scheme: GroupingScheme):
        n = len(case_sets)
        art_ix: Dict = {}
        key_ix: Dict = {}
        xr, xc, cr, cc = [], [], [], []
        for i, arts in enumerate(case_sets):
            for a in sorted(arts):
                xr.append(i)
                xc.append(art_ix.setdefault(a, len(art_ix)))
                k = group_of(a, scheme)
                if k is not None:
                    cr.append(i)
                    cc.append(key_ix.setdefault(k, len(key_ix)))
        self.sizes = np.array([len(s) for s in case_sets], dtype=np.int64)
        self.X = sparse.csr_matrix(
            (np.ones(len(xr), dtype=np.int64), (xr, xc)), shape=(n, max(len(art_ix), 1))
        )
        self.identity = scheme.is_identity
        if not self.identity:
            # duplicate (row, key) entries are summed: per-case article counts per key
            C = sparse.csr_matrix(
                (np.ones(len(cr), dtype=np.int64), (cr, cc)), shape=(n, max(len(key_ix), 1))
            )
            C.sum_duplicates()
            P = C.copy()
            P.data[:] = 1
            self.C, self.P = C, P
            self.CT, self.PT = C.T.tocsr(), P.T.tocsr()
        self.XT = self.X.T.tocsr()


def _row_blocks(n: int, chunk_size: int):
    """Split rows 0..n-2 into contiguous runs of roughly chunk_size pairs each."""
    start, acc = 0, 0
    for i in range(n - 1):
        acc += n - 1 - i
        if acc >= chunk_size:
            yield start, i + 1
            start, acc = i + 1, 0
    if start < n - 1:
        yield start, n - 1


def _compute_block(inc: _Incidence, r0: int, r1: int, alpha: float, min_emit: float) -> PairBlock:
    n = inc.sizes.size
    inter = (inc.X[r0:r1] @ inc.XT).toarray()
    if inc.identity:
        s = 2 * inter
    else:
        s = (inc.C[r0:r1] @ inc.PT).toarray() + (inc.P[r0:r1] @ inc.CT).toarray()
    local = np.arange(r0, r1)
    mask = np.arange(n)[None, :] > local[:, None]
    li, cols = np.nonzero(mask)
    rows = local[li]
    inter = inter[li, cols].astype(np.float64)
    s = s[li, cols].astype(np.float64)
    denom = (inc.sizes[rows] + inc.sizes[cols]).astype(np.float64)
    empty = denom == 0
    safe = np.where(empty, 1.0, denom)
    d = np.where(empty, 0.0, 2 * inter / safe)
    d2 = d * inter / alpha
    g = np.where(empty, 0.0, s / safe)
    gw = g * s / (2 * alpha)
    keep = gw >= min_emit
    return PairBlock(
        rows=rows[keep], cols=cols[keep], dice=d[keep], dice2=d2[keep], g_dice=g[keep],
        g_dice_weighted=gw[keep], evaluated=rows.size, all_scores=gw,
        empty_pairs=int(np.count_nonzero(empty)),
    )


class PairStream:
    """Lazily evaluated stream of SimilarityRecords for every unordered pair.

    Counters (``evaluated``, ``emitted``, ``suppressed``) and the score
    histogram are complete once the stream has been fully consumed.
    Iterate either ``blocks()`` (numpy chunks) or the stream itself
    (records); not both.
    """

    def __init__(self, cases: CaseSet, params: SimilarityParams, min_emit: float = 0.0,
                 threads: Optional[int] = None, chunk_size: int = DEFAULT_CHUNK,
                 histogram: Optional[ScoreHistogram] = None):
        if len(cases) < 2:
            raise ValidationError(f"all_pairs needs at least 2 cases, got {len(cases)}")
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        ordered = sorted(cases, key=lambda c: c.case_id)
        self.ids = [c.case_id for c in ordered]
        self.params = params
        self.min_emit = min_emit
        self.threads = threads or 1
        self.chunk_size = chunk_size
        self.n_cases = len(ordered)
        self.expected = pair_count(self.n_cases)
        self._inc = _Incidence([apply_filter(c.cited_articles, params.scheme) for c in ordered], params.scheme)
        self.histogram = histogram if histogram is not None else ScoreHistogram()
        self.evaluated = 0
        self.emitted = 0
        self.empty_pairs = 0
        self._consumed = False

    @property
    def suppressed(self) -> int:
        return self.evaluated - self.emitted

    def _jobs(self):
        return list(_row_blocks(self.n_cases, self.chunk_size))

    def blocks(self) -> Iterator[PairBlock]:
        if self._consumed:
            raise RuntimeError("PairStream can only be consumed once")
        self._consumed = True
        alpha, min_emit = self.params.alpha, self.min_emit
        jobs = self._jobs()
        if self.threads <= 1:
            results = (_compute_block(self._inc, r0, r1, alpha, min_emit) for r0, r1 in jobs)
            yield from map(self._account, results)
        else:
            # bounded look-ahead keeps memory flat; results are consumed in job order
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                pending = deque()
                it = iter(jobs)
                for r0, r1 in it:
                    pending.append(pool.submit(_compute_block, self._inc, r0, r1, alpha, min_emit))
                    if len(pending) >= 2 * self.threads:
                        yield self._account(pending.popleft().result())
                while pending:
                    yield self._account(pending.popleft().result())
        if self.empty_pairs:
            log.warning("%d pair(s) of cases with no (filtered) citations scored 0", self.empty_pairs)
        assert self.evaluated == self.expected

    def _account(self, block: PairBlock) -> PairBlock:
        self.evaluated += block.evaluated
        self.emitted += block.rows.size
        self.empty_pairs += block.empty_pairs
        self.histogram.add(block.all_scores)
        return block

    def __iter__(self) -> Iterator[SimilarityRecord]:
        ids = self.ids
        for b in self.blocks():
            for k in range(b.rows.size):
                yield SimilarityRecord(
                    ids[b.rows[k]], ids[b.cols[k]], float(b.dice[k]), float(b.dice2[k]),
                    float(b.g_dice[k]), float(b.g_dice_weighted[k]),
                )

    def tsv_lines(self) -> Iterator[str]:
        """Canonical ``pairs.tsv`` body lines (header excluded)."""
        ids = self.ids
        for b in self.blocks():
            rows, cols = b.rows.tolist(), b.cols.tolist()
            d, d2, g, gw = b.dice.tolist(), b.dice2.tolist(), b.g_dice.tolist(), b.g_dice_weighted.tolist()
            for k in range(len(rows)):
                yield f"{ids[rows[k]]}\t{ids[cols[k]]}\t{d[k]:.6f}\t{d2[k]:.6f}\t{g[k]:.6f}\t{gw[k]:.6f}"

    def summary(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "evaluated": self.evaluated,
            "emitted": self.emitted,
            "suppressed": self.suppressed,
            "expected_pairs": self.expected,
            "min_emit": self.min_emit,
            "empty_pairs": self.empty_pairs,
            "alpha": self.params.alpha,
        }


def all_pairs(cases: CaseSet, params: SimilarityParams, min_emit: float = 0.0,
              threads: Optional[int] = None, chunk_size: int = DEFAULT_CHUNK) -> PairStream:
    return PairStream(cases, params, min_emit=min_emit, threads=threads, chunk_size=chunk_size)


def write_pairs_tsv(stream: PairStream, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PAIRS_HEADER + "\n")
        for line in stream.tsv_lines():
            fh.write(line + "\n")
