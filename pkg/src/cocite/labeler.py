"""Similarity labels under the training and evaluation threshold regimes,
and disjoint caseset partitioning."""

import enum
import json
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence

from .errors import ValidationError
from .rng import StageRng

LABELS_HEADER = "case_i\tcase_j\tscore\tlabel"
SET_NAMES = ("embedder", "recommender", "eval")


class Label(str, enum.Enum):
    SIMILAR = "similar"
    NOT_SIMILAR = "not_similar"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class LabelThresholds:
    train_lo: float = 0.5
    train_hi: float = 1.0
    eval_cut: float = 1.0

    def __post_init__(self):
        if not 0 <= self.train_lo <= self.train_hi:
            raise ValidationError("thresholds need 0 <= train_lo <= train_hi")
        if not self.eval_cut > 0:
            raise ValidationError("eval_cut must be positive")


@dataclass(frozen=True)
class LabeledPair:
    case_i: str
    case_j: str
    score: float
    label: Label


def label_training(score: float, thresholds: LabelThresholds = LabelThresholds()) -> Label:
    # both boundaries fall in the excluded mid band
    if score > thresholds.train_hi:
        return Label.SIMILAR
    if score < thresholds.train_lo:
        return Label.NOT_SIMILAR
    return Label.EXCLUDED


def label_eval(score: float, thresholds: LabelThresholds = LabelThresholds()) -> bool:
    return score >= thresholds.eval_cut


def label_pairs_tsv(pairs_path, out_path, thresholds: LabelThresholds) -> Dict[str, int]:
    """Label every row of a pairs.tsv by its g_dice_weighted column."""
    counts = {l.value: 0 for l in Label}
    with open(pairs_path, encoding="utf-8") as src, open(out_path, "w", encoding="utf-8", newline="\n") as dst:
        header = src.readline().rstrip("\n").split("\t")
        try:
            si = header.index("g_dice_weighted")
        except ValueError:
            raise ValidationError(f"{pairs_path}: no g_dice_weighted column") from None
        dst.write(LABELS_HEADER + "\n")
        for line in src:
            f = line.rstrip("\n").split("\t")
            lab = label_training(float(f[si]), thresholds)
            counts[lab.value] += 1
            dst.write(f"{f[0]}\t{f[1]}\t{f[si]}\t{lab.value}\n")
    return counts


def read_labels(path) -> Iterator[LabeledPair]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != LABELS_HEADER:
            raise ValidationError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, 2):
            f = line.rstrip("\n").split("\t")
            if len(f) != 4:
                raise ValidationError(f"{path}: line {lineno}: expected 4 fields")
            yield LabeledPair(f[0], f[1], float(f[2]), Label(f[3]))


@dataclass(frozen=True)
class CasesetPartition:
    embedder: List[str]
    recommender: List[str]
    eval: List[str]
    seed: int = 0

    def sets(self) -> Dict[str, List[str]]:
        return {"embedder": self.embedder, "recommender": self.recommender, "eval": self.eval}

    def to_json(self) -> str:
        return json.dumps({**self.sets(), "seed": self.seed}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CasesetPartition":
        obj = json.loads(text)
        return cls(list(obj["embedder"]), list(obj["recommender"]), list(obj["eval"]), int(obj.get("seed", 0)))


def partition_cases(case_ids: Sequence[str], sizes: Sequence[int], seed: int) -> CasesetPartition:
    """Uniform random split into embedder / recommender / eval sets.

    Ids are sorted first so the result depends only on the id set and seed.
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) != 3 or any(s < 0 for s in sizes):
        raise ValidationError("sizes must be three non-negative integers")
    ids = sorted(set(case_ids))
    if sum(sizes) > len(ids):
        raise ValidationError(f"requested {sum(sizes)} cases ({sizes}) but corpus has {len(ids)}")
    drawn = StageRng(seed, "partition").sample(ids, sum(sizes))
    a, b = sizes[0], sizes[0] + sizes[1]
    return CasesetPartition(sorted(drawn[:a]), sorted(drawn[a:b]), sorted(drawn[b:]), seed)


def verify_disjoint(partition: CasesetPartition) -> Dict[str, List[str]]:
    """Map each case id found in two or more sets to those set names.

    An empty dict means the partition is clean.
    """
    where: Dict[str, List[str]] = {}
    for name, ids in partition.sets().items():
        for cid in set(ids):
            where.setdefault(cid, []).append(name)
    return {cid: names for cid, names in sorted(where.items()) if len(names) > 1}
