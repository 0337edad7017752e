"""Planted-cluster synthetic corpus for demos and end-to-end tests.

Each cluster owns a core of labor-law articles; members cite all but one
core article plus a little noise from industry codes, so within-cluster
pairs score far above 1.0 and cross-cluster pairs stay near 0.  Dispute
embeddings sit around a per-cluster centroid, which makes the ideal
recommender ranking known in advance.

Usage: python -m cocite.synth OUTDIR [--cases 120] [--clusters 3] [--seed 0]
"""

import argparse
import json
import os

import numpy as np

CORE_CODES = ("LSL", "LPA", "ERLSA", "CIV")
NOISE_CODES = ("TA", "SEA", "PHA", "CIV")
TOPICS = ("severance payment", "retirement pension", "unpaid salary", "improper layoff",
          "overtime pay", "occupational injury", "contract termination", "annual leave")


def make_planted_corpus(n_cases=120, n_clusters=3, core_size=10, dim=16, seed=0,
                        centroid_scale=3.0, item_noise=0.3):
    """Return (cases, embeddings, cluster_of) as plain JSON-ready structures."""
    rng = np.random.default_rng(seed)
    cores = []
    for k in range(n_clusters):
        core = [f"LSL/{k * 6 + i + 1}" for i in range(6)]
        code = CORE_CODES[1 + k % (len(CORE_CODES) - 1)]
        core += [f"{code}/{k * 4 + i + 100}" for i in range(core_size - 6)]
        cores.append(core)
    noise_pool = [f"{c}/{i}" for c in NOISE_CODES for i in range(500, 550)]
    centroids = rng.normal(scale=centroid_scale, size=(n_clusters, dim))

    cases, embeddings, cluster_of = [], [], {}
    for n in range(n_cases):
        k = n % n_clusters
        cid = f"C{n:04d}"
        cluster_of[cid] = k
        core = list(cores[k])
        core.pop(int(rng.integers(len(core))))
        noise = rng.choice(noise_pool, size=int(rng.integers(0, 3)), replace=False).tolist()
        n_items = int(rng.integers(2, 6))
        topic = TOPICS[k % len(TOPICS)]
        items = [f"Dispute over {topic}, aspect {j + 1} (case {cid})" for j in range(n_items)]
        cases.append({
            "case_id": cid,
            "year": 2020 + n % 4,
            "court": "district",
            "cause_of_action": topic,
            "cited_articles": core + noise,
            "dispute_items": items,
        })
        for j in range(n_items):
            vec = centroids[k] + rng.normal(scale=item_noise, size=dim)
            embeddings.append({"case_id": cid, "item_index": j, "vector": [round(float(x), 6) for x in vec]})
    return cases, embeddings, cluster_of


DEMO_SCHEME = {
    "default": "identity",
    "rules": [
        {"match": "TA/*", "group": "TA"},
        {"match": "SEA/*", "group": "SEA"},
        {"match": "PHA/*", "group": "PHA"},
    ],
}

DEMO_CONFIG = {
    "seed": 7,
    "rng": "pcg64",
    "paths": {
        "cases": "cases.jsonl",
        "embeddings": "embeddings.jsonl",
        "scheme": "scheme.json",
        "out_dir": "out",
    },
    "similarity": {"alpha": 3.0, "min_emit": 0.0},
    "labels": {"train_lo": 0.5, "train_hi": 1.0, "eval_cut": 1.0},
    "partition": {"sizes": [40, 40, 40]},
    "sampler": {"total_case_pairs": 100, "similar_fraction": 0.4, "m": 2, "train_fraction": 0.8},
    "eval": {"min_similar_fraction": 0.2, "max_similar_fraction": 0.5, "max_queries": 30,
             "top_n": [5, 10, 15, 20, 25, 30]},
}


def write_jsonl(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def write_demo(outdir, n_cases=120, n_clusters=3, seed=0):
    os.makedirs(outdir, exist_ok=True)
    cases, emb, cluster_of = make_planted_corpus(n_cases, n_clusters, seed=seed)
    write_jsonl(cases, os.path.join(outdir, "cases.jsonl"))
    write_jsonl(emb, os.path.join(outdir, "embeddings.jsonl"))
    with open(os.path.join(outdir, "clusters.json"), "w", encoding="utf-8") as fh:
        json.dump(cluster_of, fh, indent=1, sort_keys=True)
    with open(os.path.join(outdir, "scheme.json"), "w", encoding="utf-8") as fh:
        json.dump(DEMO_SCHEME, fh, indent=2)
    with open(os.path.join(outdir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(DEMO_CONFIG, fh, indent=2)
    return cluster_of


def main(argv=None):
    ap = argparse.ArgumentParser(description="write a planted-cluster demo corpus")
    ap.add_argument("outdir")
    ap.add_argument("--cases", type=int, default=120)
    ap.add_argument("--clusters", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    write_demo(args.outdir, args.cases, args.clusters, args.seed)


if __name__ == "__main__":
    main()
