"""``cocite`` command-line entry point.

Every command reads one JSON config (paths in it are relative to the
config file), honours ``--seed/--threads/--out`` overrides, writes its
outputs into the output directory, and records a ``<command>.manifest.json``
next to them with the resolved config, input/output digests and wall time.

Exit codes: 0 success, 2 validation error, 1 runtime error.
"""

import argparse
import copy
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict

from . import __version__
from .corpus import corpus_stats, load_cases, load_embeddings
from .errors import CociteError, MissingArtifactError, ValidationError
from .evalkit import (DEFAULT_NS, MeanEuclideanScorer, QueryFilter, Relevance, binomial_baseline,
                      eval_report, ingest_external_scores)
from .grouping import IDENTITY_SCHEME, load_scheme
from .labeler import (CasesetPartition, LabelThresholds, label_pairs_tsv, partition_cases,
                      read_labels, verify_disjoint)
from .rng import ALGORITHM, stage_seed
from .sampler import SamplerConfig, emit_trainset, sample_case_pairs, write_jsonl
from .simcore import DEFAULT_CHUNK, ScoreHistogram, SimilarityParams, all_pairs, write_pairs_tsv

log = logging.getLogger("cocite")

PRODUCERS = {
    "pairs.tsv": "simall",
    "histogram.json": "simall",
    "labels.tsv": "label",
    "partition.json": "partition",
}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


class RunConfig:
    def __init__(self, raw: dict, base_dir: str, overrides: argparse.Namespace):
        self.raw = copy.deepcopy(raw)
        if getattr(overrides, "seed", None) is not None:
            self.raw["seed"] = overrides.seed
        self.seed = int(self.raw.get("seed", 0))
        rng = self.raw.get("rng", ALGORITHM)
        if rng != ALGORITHM:
            raise ValidationError(f"unsupported rng {rng!r}; only {ALGORITHM!r} is available")
        paths = self.raw.get("paths", {})
        self.base_dir = base_dir

        def resolve(p):
            return None if p is None else os.path.normpath(os.path.join(base_dir, p))

        self.cases = resolve(paths.get("cases"))
        self.embeddings = resolve(paths.get("embeddings"))
        self.selection_embeddings = resolve(paths.get("selection_embeddings")) or self.embeddings
        self.scheme = resolve(paths.get("scheme"))
        out = getattr(overrides, "out", None)
        self.out_dir = os.path.abspath(out) if out else (resolve(paths.get("out_dir")) or os.path.abspath("out"))
        self.threads = getattr(overrides, "threads", None) or os.cpu_count() or 1
        self.figures = bool(self.raw.get("figures", True)) and not getattr(overrides, "no_figures", False)

        sim = self.raw.get("similarity", {})
        self.alpha = float(sim.get("alpha", 3.0))
        self.min_emit = float(sim.get("min_emit", 0.0))
        self.chunk_size = int(sim.get("chunk_size", DEFAULT_CHUNK))
        self.hist_cfg = sim.get("histogram", {})
        self.thresholds = LabelThresholds(**self.raw.get("labels", {}))
        self.sizes = self.raw.get("partition", {}).get("sizes")
        scfg = dict(self.raw.get("sampler", {}))
        scfg["seed"] = stage_seed(self.seed, "sample")
        self.sampler = SamplerConfig(**scfg)
        ecfg = dict(self.raw.get("eval", {}))
        self.top_n = [int(n) for n in ecfg.pop("top_n", DEFAULT_NS)]
        self.default_scorer = ecfg.pop("scorer", "builtin")
        self.qfilter = QueryFilter(**ecfg)

    @classmethod
    def load(cls, path, overrides):
        if not os.path.isfile(path):
            raise ValidationError(f"config file {path} not found")
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}: malformed JSON ({e.msg})") from None
        return cls(raw, os.path.dirname(os.path.abspath(path)), overrides)

    def require(self, *names):
        for name in names:
            p = getattr(self, name)
            if p is None:
                raise ValidationError(f"config has no paths.{name}")
            if not os.path.isfile(p):
                raise ValidationError(f"input file {p} (paths.{name}) does not exist")
        return [getattr(self, n) for n in names]

    def output(self, name):
        return os.path.join(self.out_dir, name)

    def upstream(self, name):
        p = self.output(name)
        if not os.path.isfile(p):
            raise MissingArtifactError(name, PRODUCERS[name])
        return p

    def echo(self):
        return {
            **self.raw,
            "resolved": {
                "seed": self.seed,
                "threads": self.threads,
                "sampler": asdict(self.sampler),
                "thresholds": asdict(self.thresholds),
                "query_filter": asdict(self.qfilter),
                "top_n": self.top_n,
            },
        }

    def load_scheme(self):
        if self.scheme is None:
            return IDENTITY_SCHEME
        self.require("scheme")
        return load_scheme(self.scheme)


class Run:
    """Collects inputs/outputs of one command and writes its manifest."""

    def __init__(self, command, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.inputs = []
        self.outputs = []
        self.extra = {}
        self.t0 = time.perf_counter()
        os.makedirs(cfg.out_dir, exist_ok=True)

    def input(self, path):
        self.inputs.append(path)
        return path

    def out(self, name):
        p = self.cfg.output(name)
        self.outputs.append(p)
        return p

    def finish(self):
        rel = lambda p: os.path.relpath(p, self.cfg.out_dir)
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.cfg.echo(),
            "inputs": {rel(p): sha256_file(p) for p in self.inputs},
            "outputs": {rel(p): sha256_file(p) for p in self.outputs},
            **self.extra,
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
        }
        _dump_json(manifest, self.cfg.output(f"{self.command}.manifest.json"))
        return manifest


def cmd_stats(cfg: RunConfig, args):
    run = Run("stats", cfg)
    cases = load_cases(run.input(cfg.require("cases")[0]))
    stats = corpus_stats(cases).to_dict()
    _dump_json(stats, run.out("corpus_stats.json"))
    if cfg.figures:
        from . import plots
        plots.bar_histogram(stats["articles_per_case_histogram"], run.out("articles_per_case.png"),
                            xlabel="distinct cited articles per case")
        plots.bar_histogram(stats["codes_per_case_histogram"], run.out("codes_per_case.png"),
                            xlabel="distinct cited codes per case")
    print(json.dumps(stats, indent=2, ensure_ascii=False))
    run.finish()


def cmd_simall(cfg: RunConfig, args):
    run = Run("simall", cfg)
    cases = load_cases(run.input(cfg.require("cases")[0]))
    scheme = cfg.load_scheme()
    if cfg.scheme:
        run.input(cfg.scheme)
    params = SimilarityParams(alpha=cfg.alpha, scheme=scheme)
    stream = all_pairs(cases, params, min_emit=cfg.min_emit, threads=cfg.threads, chunk_size=cfg.chunk_size)
    stream.histogram = ScoreHistogram(**cfg.hist_cfg)
    write_pairs_tsv(stream, run.out("pairs.tsv"))
    if stream.emitted + stream.suppressed != stream.expected:
        raise CociteError("pair accounting does not reconcile")
    hist = stream.histogram.to_dict()
    if sum(hist["buckets"].values()) + hist["below_display"] != stream.evaluated:
        raise CociteError("histogram does not reconcile with evaluated pairs")
    report = {**hist, **stream.summary()}
    _dump_json(report, run.out("histogram.json"))
    if cfg.figures:
        from . import plots
        plots.score_histogram(hist, run.out("score_histogram.png"))
    run.extra["counts"] = stream.summary()
    run.finish()
    print(json.dumps(report, indent=2))


def cmd_label(cfg: RunConfig, args):
    run = Run("label", cfg)
    pairs = run.input(cfg.upstream("pairs.tsv"))
    with open(run.input(cfg.upstream("histogram.json")), encoding="utf-8") as fh:
        min_emit = json.load(fh).get("min_emit", 0.0)
    if min_emit > cfg.thresholds.train_lo or min_emit > cfg.thresholds.eval_cut:
        raise ValidationError(
            f"pairs.tsv was produced with min_emit={min_emit}, above the label thresholds; "
            "suppressed pairs could not be labeled"
        )
    counts = label_pairs_tsv(pairs, run.out("labels.tsv"), cfg.thresholds)
    run.extra["counts"] = counts
    run.finish()
    print(json.dumps(counts))


def cmd_partition(cfg: RunConfig, args):
    run = Run("partition", cfg)
    cases = load_cases(run.input(cfg.require("cases")[0]))
    if not cfg.sizes:
        raise ValidationError("config has no partition.sizes")
    part = partition_cases(cases.ids(), cfg.sizes, cfg.seed)
    violations = verify_disjoint(part)
    if violations:
        raise CociteError(f"partition is not disjoint: {violations}")
    with open(run.out("partition.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(part.to_json())
    run.extra["sizes"] = {k: len(v) for k, v in part.sets().items()}
    run.finish()
    print(json.dumps(run.extra["sizes"]))


def _read_partition(run, cfg):
    with open(run.input(cfg.upstream("partition.json")), encoding="utf-8") as fh:
        part = CasesetPartition.from_json(fh.read())
    if verify_disjoint(part):
        raise ValidationError("partition.json sets overlap")
    return part


def cmd_sample(cfg: RunConfig, args):
    run = Run("sample", cfg)
    labels = run.input(cfg.upstream("labels.tsv"))
    part = _read_partition(run, cfg)
    cases_path, = cfg.require("cases")
    cases = load_cases(run.input(cases_path))
    if cfg.selection_embeddings is None or not os.path.isfile(cfg.selection_embeddings):
        raise ValidationError("sample needs paths.selection_embeddings or paths.embeddings")
    emb = load_embeddings(run.input(cfg.selection_embeddings), cases)
    members = set(part.embedder)
    pool = (p for p in read_labels(labels) if p.case_i in members and p.case_j in members)
    sampled = sample_case_pairs(pool, cfg.sampler)
    ts = emit_trainset(sampled, cases, emb, cfg.sampler)
    write_jsonl(ts.train, run.out("trainset.jsonl"))
    write_jsonl(ts.val, run.out("valset.jsonl"))
    _dump_json(ts.report, run.out("sample_report.json"))
    run.extra["counts"] = ts.report
    run.finish()
    print(json.dumps(ts.report, indent=2))


def cmd_eval(cfg: RunConfig, args):
    run = Run("eval", cfg)
    labels = run.input(cfg.upstream("labels.tsv"))
    part = _read_partition(run, cfg)
    pool_ids = part.eval
    if len(pool_ids) < 2:
        raise ValidationError("the eval caseset needs at least 2 cases")
    relevance = Relevance(pool_ids, read_labels(labels), cfg.thresholds)
    scorer_arg = args.scorer or cfg.default_scorer
    if scorer_arg == "builtin":
        cases_path, emb_path = cfg.require("cases", "embeddings")
        cases = load_cases(run.input(cases_path))
        for cid in pool_ids:
            if cid not in cases:
                raise ValidationError(f"eval case {cid!r} not in corpus")
            if not cases[cid].dispute_items:
                raise ValidationError(f"eval case {cid!r} has no dispute items")
        scorer = MeanEuclideanScorer(load_embeddings(run.input(emb_path), cases))
    else:
        if not os.path.isfile(scorer_arg):
            raise ValidationError(f"scores file {scorer_arg} not found")
        scorer = ingest_external_scores(run.input(scorer_arg), pool_ids)
    report = eval_report(relevance, scorer, cfg.qfilter, cfg.top_n, seed=cfg.seed)
    out = report.to_dict()
    n = max(cfg.top_n)
    out["chance_baseline"] = binomial_baseline(
        n, math.ceil(0.7 * n), cfg.qfilter.min_similar_fraction or 0.3, cfg.qfilter.max_similar_fraction
    )
    out["scorer"] = "builtin-mean-euclidean" if scorer_arg == "builtin" else "external"
    out["config"] = {"query_filter": asdict(cfg.qfilter), "top_n": cfg.top_n, "seed": cfg.seed,
                     "eval_cut": cfg.thresholds.eval_cut}
    _dump_json(out, run.out("eval_report.json"))
    if cfg.figures:
        from . import plots
        plots.eval_curve(out, run.out("eval_curve.png"))
    run.finish()
    for r in out["rows"]:
        print(f"top{r['topN']:>3}  precision {r['precision']:.4f}  ndcg {r['ndcg']:.4f}")


COMMANDS = {
    "stats": cmd_stats,
    "simall": cmd_simall,
    "label": cmd_label,
    "partition": cmd_partition,
    "sample": cmd_sample,
    "eval": cmd_eval,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the global seed")
    common.add_argument("--threads", type=int, help="worker cap (default: available CPUs)")
    common.add_argument("--out", help="output directory (overrides paths.out_dir)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="cocite", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "eval":
            p.add_argument("--scorer", help="'builtin' or a scores.tsv path")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig.load(args.config, args)
        COMMANDS[args.command](cfg, args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CociteError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
