"""End-to-end synthesis: generate with CBS, align with TER, rejudge, build phrase spans.

Every stage maps records to records, so the stages run standalone on
JSONL files or chained in ``run_pipeline``. Work is split per pair (for
generation) and per record (for annotation); with ``workers > 1`` a process
pool does the work and results are merged back in input order.
"""

from __future__ import annotations

import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .annotate import Thresholds, phrase_spans, rejudge
from .config import PipelineConfig
from .core import BAD_LABEL, InvalidInput, MqmRecord, Severity, spans_from_severities, write_jsonl
from .corpus import Pair, pair_fingerprint, read_parallel_tsv
from .decode import FORCED, constrained_beam_search, forced_decode_probs
from .spce import DepTree, read_conllu, spce_trace
from .ter import coarse_labels, format_trace, ter_align, ter_score
from .toymodel import ToyModel

STAGES = ("generation", "ter", "forced_decode", "rejudge", "spce")


@dataclass
class StageTimer:
    seconds: Counter = field(default_factory=Counter)

    def add(self, stage: str, start: float) -> float:
        now = time.perf_counter()
        self.seconds[stage] += now - start
        return now

    def merge(self, other: "StageTimer") -> None:
        self.seconds.update(other.seconds)


def model_id(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def check_supervision(pairs: Sequence[Pair], annotator: ToyModel, amateur: bool) -> None:
    """Generation pairs must come from the annotator's own training split unless ``amateur``."""
    if amateur:
        return
    if not annotator.train_fingerprints:
        raise InvalidInput("annotator model does not record its training split; pass --amateur to skip the check")
    missing = [i for i, (s, t) in enumerate(pairs) if pair_fingerprint(s, t) not in annotator.train_fingerprints]
    if missing:
        raise InvalidInput(
            f"{len(missing)} of {len(pairs)} generation pairs (first: pair {missing[0]}) are outside "
            "the annotator's training split; pass --amateur to allow this")


def generate_record(model: ToyModel, gen_id: str, src, ref, cfg: PipelineConfig) -> Optional[MqmRecord]:
    """One CBS translation of ``src`` steered by ``ref``; None when the output is empty."""
    res = constrained_beam_search(model, src, ref, cfg.cbs_tau, cfg.beam_size, cfg.max_len(len(ref)))
    if not res.tokens:
        return None
    extra = {"generator": gen_id, "provenance": res.provenance}
    if res.truncated:
        extra["truncated"] = True
    return MqmRecord(src=list(src), mt=list(res.tokens), ref=list(ref), extra=extra)


def annotate_record(rec: MqmRecord, annotator: ToyModel, th: Thresholds, tree: Optional[DepTree] = None,
                    timer: Optional[StageTimer] = None, trace: Optional[list] = None) -> MqmRecord:
    """TER coarse labels, annotator probabilities, severities and spans for one record."""
    if rec.ref is None:
        raise InvalidInput("record has no reference to align against")
    timer = timer or StageTimer()
    t = time.perf_counter()
    align = ter_align(rec.mt, rec.ref)
    coarse = coarse_labels(align, len(rec.mt))
    t = timer.add("ter", t)
    fd = forced_decode_probs(annotator, rec.src, rec.mt)
    t = timer.add("forced_decode", t)
    result = rejudge(coarse, fd.probs, th)
    t = timer.add("rejudge", t)
    spans = phrase_spans(result.severities, tree)
    timer.add("spce", t)
    extra = dict(rec.extra)
    extra.update({
        "coarse_labels": coarse,
        "probs": fd.probs,
        "severities": [s.name for s in result.severities],
        "ter": round(ter_score(align), 6),
    })
    if fd.oov:
        extra["oov"] = fd.oov
    if trace is not None:
        trace.append(("ter", format_trace(align)))
        if tree is not None:
            trace.append(("spce", _spce_trace_text(tree, result.severities)))
    return MqmRecord.from_spans(rec.src, rec.mt, spans, ref=rec.ref, **extra)


def apply_tree(rec: MqmRecord, tree: DepTree, trace: Optional[list] = None) -> MqmRecord:
    """Rebuild spans of an annotated record from its stored severities and a tree."""
    names = rec.extra.get("severities")
    if names is None:
        raise InvalidInput("record carries no 'severities' field; run annotate first")
    sev = [Severity.parse(v) for v in names]
    if len(tree) != len(rec.mt):
        raise InvalidInput(f"tree has {len(tree)} tokens, translation has {len(rec.mt)}")
    if trace is not None:
        trace.append(("spce", _spce_trace_text(tree, sev)))
    return MqmRecord.from_spans(rec.src, rec.mt, phrase_spans(sev, tree), ref=rec.ref, **rec.extra)


def _spce_trace_text(tree: DepTree, sev) -> str:
    lines = []
    for span in spans_from_severities(sev):
        steps = spce_trace(tree, span.start, span.end)
        body = " | ".join(",".join(map(str, p)) for p in steps)
        lines.append(f"run {span.start}-{span.end}\t{body}")
    return "\n".join(lines)


# -- worker plumbing ---------------------------------------------------------

_STATE: dict = {}
_MODEL_CACHE: dict = {}


def load_model(path: str) -> ToyModel:
    st = os.stat(path)
    key = (os.path.realpath(path), st.st_mtime_ns, st.st_size)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = ToyModel.load(path)
    return _MODEL_CACHE[key]


def _init_worker(cfg: PipelineConfig, with_annotator: bool, th: Optional[Thresholds]) -> None:
    _STATE.clear()
    _STATE["cfg"] = cfg
    _STATE["generators"] = [(model_id(p), load_model(p)) for p in cfg.generator_ids]
    _STATE["annotator"] = load_model(cfg.annotator_id) if with_annotator else None
    _STATE["th"] = th


def _generate_job(pair):
    src, ref = pair
    timer = StageTimer()
    out = []
    for gen_id, model in _STATE["generators"]:
        t = time.perf_counter()
        out.append(generate_record(model, gen_id, src, ref, _STATE["cfg"]))
        timer.add("generation", t)
    return out, timer


def _annotate_job(job):
    rec, tree = job
    timer = StageTimer()
    trace = [] if (_STATE["cfg"].ter_trace or _STATE["cfg"].spce_trace) else None
    new = annotate_record(rec, _STATE["annotator"], _STATE["th"], tree, timer, trace)
    return new, timer, trace


def _map(fn, items, cfg: PipelineConfig, with_annotator: bool, th):
    if cfg.workers <= 1:
        _init_worker(cfg, with_annotator, th)
        return [fn(x) for x in items]
    with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg, with_annotator, th)) as ex:
        # map yields in submission order, so output order is independent of scheduling
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (cfg.workers * 8) or 1)))


# -- stages ------------------------------------------------------------------

def generate_stage(cfg: PipelineConfig, pairs: Sequence[Pair], timer: StageTimer) -> tuple[list[MqmRecord], Counter]:
    counts = Counter()
    records = []
    for outs, t in _map(_generate_job, list(pairs), cfg, False, None):
        timer.merge(t)
        for rec in outs:
            if rec is None:
                counts["empty_outputs"] += 1
                continue
            counts["truncated"] += bool(rec.extra.get("truncated"))
            prov = rec.extra["provenance"]
            counts["forced_tokens"] += sum(1 for p in prov if p == FORCED)
            counts["free_tokens"] += sum(1 for p in prov if p != FORCED)
            records.append(rec)
    return records, counts


def load_trees(path: str, records: Sequence[MqmRecord]) -> list[DepTree]:
    trees = read_conllu(path)
    if len(trees) != len(records):
        raise InvalidInput(f"{path}: {len(trees)} trees for {len(records)} translations")
    for i, (tree, rec) in enumerate(zip(trees, records)):
        if len(tree) != len(rec.mt):
            raise InvalidInput(f"{path}: tree {i} has {len(tree)} tokens, translation {i} has {len(rec.mt)}")
    return trees


def annotate_stage(cfg: PipelineConfig, records: Sequence[MqmRecord], th: Thresholds,
                   trees: Optional[Sequence[DepTree]], timer: StageTimer) -> tuple[list[MqmRecord], Counter, list]:
    jobs = [(rec, None if trees is None else trees[i]) for i, rec in enumerate(records)]
    counts = Counter()
    out, traces = [], []
    for rec, t, trace in _map(_annotate_job, jobs, cfg, True, th):
        timer.merge(t)
        counts["oov_tokens"] += len(rec.extra.get("oov", ()))
        counts["bad_tokens"] += sum(1 for lab in rec.labels if lab == BAD_LABEL)
        counts["tokens"] += len(rec.mt)
        out.append(rec)
        traces.append(trace or [])
    return out, counts, traces


def write_traces(cfg: PipelineConfig, traces: list) -> None:
    for kind, path in (("ter", cfg.ter_trace), ("spce", cfg.spce_trace)):
        if not path:
            continue
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for i, items in enumerate(traces):
                f.write(f"# record {i}\n")
                for k, text in items:
                    if k == kind and text:
                        f.write(text + "\n")
                f.write("\n")


def summarize(counts: Counter, timer: StageTimer, **extra) -> dict:
    summary = dict(extra)
    summary.update(sorted(counts.items()))
    if counts.get("tokens"):
        summary["error_rate"] = round(100.0 * counts["bad_tokens"] / counts["tokens"], 6)
    for stage in STAGES:
        summary[f"time_{stage}"] = round(timer.seconds.get(stage, 0.0), 3)
    return summary


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Generate, label and write records for every (pair, generator); returns a summary."""
    cfg.validate()
    if not cfg.parallel or not cfg.output:
        raise InvalidInput("parallel and output paths are required")
    pairs = read_parallel_tsv(cfg.parallel)
    if not pairs:
        raise InvalidInput(f"{cfg.parallel}: no parallel pairs")
    th = cfg.resolve_thresholds()
    check_supervision(pairs, load_model(cfg.annotator_id), cfg.amateur)
    timer = StageTimer()
    records, counts = generate_stage(cfg, pairs, timer)
    trees = load_trees(cfg.trees, records) if cfg.trees else None
    records, more, traces = annotate_stage(cfg, records, th, trees, timer)
    counts.update(more)
    write_jsonl(cfg.output, records)
    write_traces(cfg, traces)
    return summarize(counts, timer, pairs=len(pairs), generators=len(cfg.generator_ids), records=len(records))
