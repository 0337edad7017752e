"""Contrastive training pairs of dispute items, mined from labeled case pairs.

Case pairs are drawn per label at a fixed ratio; within each drawn pair the
m cross-case dispute-item combinations that are closest (similar pairs) or
farthest (not-similar pairs) in the supplied embedding space become
training instances.
"""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .corpus import CaseSet, EmbeddingStore
from .errors import ValidationError
from .labeler import Label, LabeledPair
from .rng import StageRng


@dataclass(frozen=True)
class SamplerConfig:
    total_case_pairs: int = 50_000
    similar_fraction: float = 0.4
    m: int = 2
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.similar_fraction < 1:
            raise ValidationError("similar_fraction must lie in (0, 1)")
        if self.m < 1:
            raise ValidationError("m must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ValidationError("train_fraction must lie in (0, 1)")
        if self.total_case_pairs < 1:
            raise ValidationError("total_case_pairs must be positive")


@dataclass(frozen=True)
class TrainInstance:
    text_a: str
    text_b: str
    label: str
    case_a: str
    case_b: str
    item_a: int
    item_b: int
    distance: float

    def to_json(self) -> str:
        return json.dumps(
            {"text_a": self.text_a, "text_b": self.text_b, "label": self.label,
             "case_a": self.case_a, "case_b": self.case_b},
            ensure_ascii=False,
        )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def euclidean(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.sqrt(np.sum((u - v) ** 2)))


def distance_matrix(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """All cross distances; entry [i, j] is bit-identical to euclidean(U[i], V[j])."""
    if U.shape[1] != V.shape[1]:
        raise ValueError(f"dimension mismatch: {U.shape[1]} vs {V.shape[1]}")
    return np.sqrt(np.sum((U[:, None, :] - V[None, :, :]) ** 2, axis=-1))


def sample_case_pairs(pairs: Iterable[LabeledPair], config: SamplerConfig) -> List[LabeledPair]:
    similar, not_similar = [], []
    for p in pairs:
        if p.label is Label.SIMILAR:
            similar.append(p)
        elif p.label is Label.NOT_SIMILAR:
            not_similar.append(p)
    n_sim = _round_half_up(config.total_case_pairs * config.similar_fraction)
    n_not = config.total_case_pairs - n_sim
    if len(similar) < n_sim:
        raise ValidationError(f"requested {n_sim} similar, have {len(similar)}")
    if len(not_similar) < n_not:
        raise ValidationError(f"requested {n_not} not-similar, have {len(not_similar)}")
    key = lambda p: (p.case_i, p.case_j)
    rng = StageRng(config.seed, "sample-pairs")
    return rng.sample(sorted(similar, key=key), n_sim) + rng.sample(sorted(not_similar, key=key), n_not)


def select_dispute_pairs(pair: LabeledPair, cases: CaseSet, embeddings: EmbeddingStore,
                         m: int) -> Tuple[List[TrainInstance], int]:
    """Pick the m extremal item combinations of one case pair.

    Returns the instances and the shortfall (m minus the number available
    when the pair has fewer than m combinations).  Ties are broken by
    (item_a, item_b) ascending.
    """
    if pair.label not in (Label.SIMILAR, Label.NOT_SIMILAR):
        raise ValidationError(f"pair ({pair.case_i}, {pair.case_j}) is not trainable ({pair.label.value})")
    ia, ib = embeddings.item_indices(pair.case_i), embeddings.item_indices(pair.case_j)
    for cid, ix in ((pair.case_i, ia), (pair.case_j, ib)):
        if not ix:
            raise ValidationError(f"case {cid!r} has no embedded dispute items")
    D = distance_matrix(embeddings.matrix(pair.case_i), embeddings.matrix(pair.case_j))
    combos = [(float(D[x, y]), x, y) for x in range(len(ia)) for y in range(len(ib))]
    if pair.label is Label.SIMILAR:
        combos.sort(key=lambda t: (t[0], t[1], t[2]))
    else:
        combos.sort(key=lambda t: (-t[0], t[1], t[2]))
    chosen = combos[:m]
    ca, cb = cases[pair.case_i], cases[pair.case_j]
    out = [
        TrainInstance(ca.dispute_items[ia[x]], cb.dispute_items[ib[y]], pair.label.value,
                      pair.case_i, pair.case_j, ia[x], ib[y], d)
        for d, x, y in chosen
    ]
    return out, m - len(out)


@dataclass
class Trainset:
    train: List[TrainInstance]
    val: List[TrainInstance]
    report: dict


def emit_trainset(sampled: Sequence[LabeledPair], cases: CaseSet, embeddings: EmbeddingStore,
                  config: SamplerConfig) -> Trainset:
    instances: List[TrainInstance] = []
    shortfall = 0
    for p in sampled:
        got, short = select_dispute_pairs(p, cases, embeddings, config.m)
        instances.extend(got)
        shortfall += short

    rng = StageRng(config.seed, "split")
    train, val = [], []
    for label in (Label.SIMILAR.value, Label.NOT_SIMILAR.value):
        group = rng.shuffle([x for x in instances if x.label == label])
        k = _round_half_up(len(group) * config.train_fraction)
        train.extend(group[:k])
        val.extend(group[k:])
    rng.shuffle(train)
    rng.shuffle(val)

    texts = Counter((x.text_a, x.text_b) for x in instances)
    labels = Counter(x.label for x in instances)
    report = {
        "case_pairs": len(sampled),
        "case_pairs_by_label": dict(sorted(Counter(p.label.value for p in sampled).items())),
        "instances": len(instances),
        "instances_by_label": dict(sorted(labels.items())),
        "train": len(train),
        "val": len(val),
        "train_by_label": dict(sorted(Counter(x.label for x in train).items())),
        "val_by_label": dict(sorted(Counter(x.label for x in val).items())),
        "shortfall": shortfall,
        "duplicate_text_pairs": sum(c - 1 for c in texts.values() if c > 1),
        "seed": config.seed,
        "config": asdict(config),
    }
    return Trainset(train, val, report)


def write_jsonl(instances: Iterable[TrainInstance], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in instances:
            fh.write(x.to_json() + "\n")
