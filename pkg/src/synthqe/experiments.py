"""Analysis drivers: self- vs cross-annotation error rates, generator diversity, downsampling.

Reports are plain dicts serialised with sorted keys and rounded floats so a
rerun with the same inputs and seed gives byte-identical files.
"""

from __future__ import annotations

import itertools
import json
from typing import Sequence

import numpy as np

from .config import PipelineConfig
from .core import InvalidInput, MqmRecord
from .corpus import Pair, read_parallel_tsv, rng_stream
from .metrics import bleu, downsample_match, error_rate, ks_distance
from .pipeline import StageTimer, annotate_record, generate_record, load_model, model_id
from .toymodel import ToyModel

_DIGITS = 6


def _round(obj):
    if isinstance(obj, float):
        return round(obj, _DIGITS)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def report_json(report: dict) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(report_json(report))


def _generate(model: ToyModel, gen_id: str, pairs: Sequence[Pair], cfg: PipelineConfig) -> list:
    """Outputs aligned with ``pairs``; None where the generator produced nothing."""
    return [generate_record(model, gen_id, s, r, cfg) for s, r in pairs]


def _annotate(records, annotator: ToyModel, cfg: PipelineConfig) -> list[MqmRecord]:
    th = cfg.resolve_thresholds()
    timer = StageTimer()
    return [annotate_record(rec, annotator, th, None, timer) for rec in records if rec is not None]


def _load(cfg: PipelineConfig):
    if not cfg.parallel:
        raise InvalidInput("parallel pairs are required")
    pairs = read_parallel_tsv(cfg.parallel)
    if not pairs:
        raise InvalidInput(f"{cfg.parallel}: no parallel pairs")
    models = [(model_id(p), load_model(p)) for p in cfg.generator_ids]
    return pairs, models


def _tokens(records) -> int:
    return sum(len(r.mt) for r in records)


def run_self_annotation_experiment(cfg: PipelineConfig) -> dict:
    """Error rate when a model grades its own output vs a larger model grading it.

    Models are ordered by training-split size. Every model annotates its own
    CBS output, and the largest model also annotates the smallest model's
    output. The generation pairs are not checked against any training split.
    """
    pairs, models = _load(cfg)
    if len(models) < 2:
        raise InvalidInput("the self-annotation experiment needs at least two models")
    order = sorted(range(len(models)), key=lambda i: len(models[i][1].train_fingerprints))
    outputs = {i: _generate(models[i][1], models[i][0], pairs, cfg) for i in range(len(models))}
    small, large = order[0], order[-1]
    runs = [(i, i, "self") for i in order] + [(small, large, "cross")]
    conditions = []
    for g, a, kind in runs:
        recs = _annotate(outputs[g], models[a][1], cfg)
        conditions.append({
            "kind": kind,
            "generator": models[g][0],
            "annotator": models[a][0],
            "generator_train_pairs": len(models[g][1].train_fingerprints),
            "annotator_train_pairs": len(models[a][1].train_fingerprints),
            "records": len(recs),
            "tokens": _tokens(recs),
            "error_rate": error_rate(recs) if recs else None,
        })
    self_small = conditions[0]["error_rate"]
    cross = conditions[-1]["error_rate"]
    return {
        "experiment": "self-annotation",
        "seed": cfg.seed,
        "config": cfg.snapshot(),
        "pairs": len(pairs),
        "conditions": conditions,
        "cross_minus_self": None if self_small is None or cross is None else cross - self_small,
    }


def run_diversity_experiment(cfg: PipelineConfig) -> dict:
    """Pairwise BLEU between generators on the same sources, plus single- vs union-corpus statistics."""
    pairs, models = _load(cfg)
    if len(models) < 2:
        raise InvalidInput("the diversity experiment needs at least two generators")
    if cfg.annotator_id is None:
        raise InvalidInput("annotator_id is required for error statistics")
    annotator = load_model(cfg.annotator_id)
    outputs = [_generate(m, name, pairs, cfg) for name, m in models]
    hyps = [[[] if r is None else r.mt for r in out] for out in outputs]
    refs = [r for _, r in pairs]
    per_gen, union, all_recs = [], set(), []
    for (name, _), out, h in zip(models, outputs, hyps):
        recs = _annotate(out, annotator, cfg)
        distinct = {(tuple(r.src), tuple(r.mt)) for r in recs}
        union |= distinct
        all_recs.extend(recs)
        per_gen.append({
            "generator": name,
            "records": len(recs),
            "distinct_translations": len(distinct),
            "bleu_vs_ref": bleu(h, refs),
            "error_rate": error_rate(recs) if recs else None,
        })
    pairwise = []
    for i, j in itertools.combinations(range(len(models)), 2):
        pairwise.append({"a": models[i][0], "b": models[j][0], "bleu": bleu(hyps[i], hyps[j])})
    return {
        "experiment": "diversity",
        "seed": cfg.seed,
        "config": cfg.snapshot(),
        "pairs": len(pairs),
        "generators": per_gen,
        "inter_generator_bleu": pairwise,
        "mean_inter_generator_bleu": float(np.mean([p["bleu"] for p in pairwise])),
        "union": {
            "records": len(all_recs),
            "distinct_translations": len(union),
            "error_rate": error_rate(all_recs) if all_recs else None,
        },
    }


def record_error_rates(records: Sequence[MqmRecord]) -> list[float]:
    return [error_rate([r]) for r in records]


def run_downsample_experiment(pool: Sequence[MqmRecord], target: Sequence[MqmRecord], k: int,
                              seed: int) -> tuple[list[int], dict]:
    """Pick k pool records whose error rates follow the target's empirical distribution.

    A uniformly random k-subset of the pool, drawn from its own stream, is
    reported alongside as the unmatched baseline.
    """
    pool_rates = record_error_rates(pool)
    target_rates = record_error_rates(target)
    if not target_rates:
        raise InvalidInput("empty target set")
    if k < 1 or k > len(pool_rates):
        raise InvalidInput(f"k must lie in [1, {len(pool_rates)}]")
    picked = downsample_match(pool_rates, target_rates, k, rng_stream(seed, "downsample"))
    baseline = rng_stream(seed, "downsample-baseline").choice(len(pool_rates), size=k, replace=False)
    chosen = [pool_rates[i] for i in picked]
    random_rates = [pool_rates[int(i)] for i in baseline]
    report = {
        "experiment": "downsample",
        "seed": seed,
        "k": k,
        "pool_records": len(pool_rates),
        "target_records": len(target_rates),
        "mean_rate": {
            "pool": float(np.mean(pool_rates)),
            "target": float(np.mean(target_rates)),
            "matched": float(np.mean(chosen)),
            "random": float(np.mean(random_rates)),
        },
        "ks_to_target": {
            "pool": ks_distance(pool_rates, target_rates),
            "matched": ks_distance(chosen, target_rates),
            "random": ks_distance(random_rates, target_rates),
        },
    }
    return picked, report
