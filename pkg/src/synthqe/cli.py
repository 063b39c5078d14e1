"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or arguments, 2 I/O failure.
Summaries go to stdout as ``key=value`` lines.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import fields
from typing import Optional, Sequence

from .annotate import ValidationItem, calibrate_thresholds, calibration_objective
from .config import PipelineConfig, read_config_file
from .core import InvalidInput, MqmRecord, read_jsonl, write_jsonl
from .corpus import read_parallel_tsv
from .experiments import (run_diversity_experiment, run_downsample_experiment, run_self_annotation_experiment,
                          write_report)
from .metrics import f1_binary, mcc, pearson, span_weighted_f1, spearman
from .pipeline import (StageTimer, annotate_stage, apply_tree, check_supervision, generate_stage, load_model,
                       load_trees, model_id, run_pipeline, summarize, write_traces)
from .toymodel import DEFAULT_EM_ITERATIONS, DEFAULT_KAPPA, DEFAULT_LAMBDA, train_toy_model


class UsageError(InvalidInput):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_HELP = {
    "parallel": "parallel corpus TSV (source<TAB>target, pre-tokenised)",
    "trees": "CoNLL-U trees of the translations, one sentence per record",
    "generator_ids": "generator model file(s)",
    "annotator_id": "annotator model file",
    "thresholds": "thresholds file (t_critical, t_major, t_minor, one per line)",
    "output": "output path",
    "cbs_tau": "force the next reference token when its probability exceeds this",
    "amateur": "skip the check that generation pairs come from the annotator's training split",
    "allow_self_annotation": "allow the annotator to be one of the generators",
    "workers": "worker processes",
    "ter_trace": "write TER alignment traces here",
    "spce_trace": "write per-iteration phrase sets here",
}
_TYPES = {"float": float, "int": int}


def _add_config_flags(p: argparse.ArgumentParser, names: Sequence[str]) -> None:
    """Flags mirror PipelineConfig fields; unset flags stay absent so the config file can fill them."""
    p.add_argument("--config", help="flat key = value config file (flags override it)")
    types = {f.name: f.type for f in fields(PipelineConfig)}
    for name in names:
        flag = "--" + name.replace("_", "-")
        kind = types[name]
        kw = {"dest": name, "default": argparse.SUPPRESS, "help": _HELP.get(name)}
        if "bool" in kind:
            p.add_argument(flag, action="store_true", **kw)
        elif "list" in kind:
            p.add_argument(flag, nargs="+", **kw)
        else:
            conv = next((t for k, t in _TYPES.items() if k in kind), str)
            p.add_argument(flag, type=conv, **kw)


def _config(args) -> PipelineConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    names = {f.name for f in fields(PipelineConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    return PipelineConfig(**values)


def _emit(summary: dict, out=None) -> None:
    out = out or sys.stdout
    for k, v in summary.items():
        if isinstance(v, float):
            v = "nan" if math.isnan(v) else round(v, 6)
        out.write(f"{k}={v}\n")


_THRESHOLD_FLAGS = ("thresholds", "t_critical", "t_major", "t_minor")
_DECODE_FLAGS = ("cbs_tau", "beam_size", "max_len_factor", "workers")


def _parse_lines(spec: Optional[str], n: int) -> slice:
    if not spec:
        return slice(0, n)
    try:
        a, b = spec.split(":")
        return slice(int(a) if a else 0, int(b) if b else n)
    except ValueError:
        raise InvalidInput(f"--lines expects START:END, got {spec!r}") from None


# -- subcommands -------------------------------------------------------------

def cmd_train_toy(args) -> dict:
    pairs = read_parallel_tsv(args.parallel)
    pairs = pairs[_parse_lines(args.lines, len(pairs))]
    model = train_toy_model(pairs, em_iterations=args.em_iterations, lam=args.lam, kappa=args.kappa)
    model.save(args.output)
    return {"pairs": len(pairs), "src_vocab": len(model.src_vocab), "tgt_vocab": len(model.tgt_vocab),
            "length_ratio": model.length_ratio}


def cmd_generate(args) -> dict:
    cfg = _config(args)
    cfg.validate(need_annotator=False)
    if not cfg.parallel or not cfg.output:
        raise InvalidInput("--parallel and --output are required")
    pairs = read_parallel_tsv(cfg.parallel)
    timer = StageTimer()
    records, counts = generate_stage(cfg, pairs, timer)
    write_jsonl(cfg.output, records)
    return summarize(counts, timer, pairs=len(pairs), records=len(records))


def _read_records(path) -> list[MqmRecord]:
    return read_jsonl(path)


def cmd_annotate(args) -> dict:
    cfg = _config(args)
    if cfg.annotator_id is None or not cfg.output:
        raise InvalidInput("--annotator-id and --output are required")
    records = _read_records(args.input)
    ann_name = model_id(cfg.annotator_id)
    if not cfg.allow_self_annotation and any(r.extra.get("generator") == ann_name for r in records):
        raise InvalidInput("annotator produced some of these translations (use --allow-self-annotation)")
    th = cfg.resolve_thresholds()
    check_supervision([(r.src, r.ref or []) for r in records], load_model(cfg.annotator_id), cfg.amateur)
    trees = load_trees(cfg.trees, records) if cfg.trees else None
    timer = StageTimer()
    out, counts, traces = annotate_stage(cfg, records, th, trees, timer)
    write_jsonl(cfg.output, out)
    write_traces(cfg, traces)
    return summarize(counts, timer, records=len(out))


def cmd_spce(args) -> dict:
    cfg = _config(args)
    if not cfg.trees or not cfg.output:
        raise InvalidInput("--trees and --output are required")
    records = _read_records(args.input)
    trees = load_trees(cfg.trees, records)
    traces = []
    out = []
    for rec, tree in zip(records, trees):
        trace = [] if cfg.spce_trace else None
        out.append(apply_tree(rec, tree, trace))
        traces.append(trace or [])
    write_jsonl(cfg.output, out)
    write_traces(cfg, traces)
    return {"records": len(out), "spans": sum(len(r.spans) for r in out)}


def cmd_pipeline(args) -> dict:
    return run_pipeline(_config(args))


def _validation_items(records, trees) -> list[ValidationItem]:
    items = []
    for i, rec in enumerate(records):
        probs, coarse = rec.extra.get("probs"), rec.extra.get("coarse_labels")
        if probs is None or coarse is None:
            raise InvalidInput(f"validation record {i} lacks probs/coarse_labels (run annotate first)")
        items.append(ValidationItem(probs, coarse, rec.spans, None if trees is None else trees[i]))
    return items


def cmd_calibrate(args) -> dict:
    cfg = _config(args)
    records = _read_records(args.input)
    trees = load_trees(cfg.trees, records) if cfg.trees else None
    items = _validation_items(records, trees)
    th = calibrate_thresholds(items, cfg.grid_step)
    if cfg.output:
        th.save(cfg.output)
    return {"t_critical": th.t_critical, "t_major": th.t_major, "t_minor": th.t_minor,
            "span_f1": calibration_objective(items, th)}


def evaluate_records(pred: Sequence[MqmRecord], gold: Sequence[MqmRecord]) -> dict:
    if len(pred) != len(gold):
        raise InvalidInput(f"{len(pred)} predicted vs {len(gold)} gold records")
    p_labels, g_labels, p_scores, g_scores = [], [], [], []
    for i, (p, g) in enumerate(zip(pred, gold)):
        if p.mt != g.mt:
            raise InvalidInput(f"record {i}: translations differ between pred and gold")
        p = MqmRecord.from_spans(p.src, p.mt, p.spans) if p.labels is None or p.score is None else p
        g = MqmRecord.from_spans(g.src, g.mt, g.spans) if g.labels is None or g.score is None else g
        p_labels += p.labels
        g_labels += g.labels
        p_scores.append(p.score)
        g_scores.append(g.score)
    spans = span_weighted_f1([p.spans for p in pred], [g.spans for g in gold], [len(g.mt) for g in gold])
    nan = float("nan")
    return {
        "records": len(pred),
        "spearman": spearman(p_scores, g_scores) if len(pred) > 1 else nan,
        "pearson": pearson(p_scores, g_scores) if len(pred) > 1 else nan,
        "mcc": mcc(p_labels, g_labels),
        "f1_bad": f1_binary(p_labels, g_labels, "BAD"),
        "f1_ok": f1_binary(p_labels, g_labels, "OK"),
        "span_f1": spans.f1,
        "span_prec": spans.precision,
        "span_recall": spans.recall,
    }


def cmd_evaluate(args) -> dict:
    report = evaluate_records(_read_records(args.pred), _read_records(args.gold))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["metric", "value"])
            for k, v in report.items():
                w.writerow([k, v])
    return report


def cmd_experiment(args) -> dict:
    if args.experiment == "downsample":
        picked, report = run_downsample_experiment(_read_records(args.pool), _read_records(args.target),
                                                   args.k, args.seed)
        if args.selected:
            pool = _read_records(args.pool)
            write_jsonl(args.selected, [pool[i] for i in picked])
    else:
        cfg = _config(args)
        run = run_self_annotation_experiment if args.experiment == "self-annotation" else run_diversity_experiment
        report = run(cfg)
    if args.report:
        write_report(args.report, report)
    flat = {"experiment": report["experiment"]}
    if args.experiment == "self-annotation":
        for c in report["conditions"]:
            flat[f"error_rate_{c['generator']}_{c['annotator']}"] = c["error_rate"]
        flat["cross_minus_self"] = report["cross_minus_self"]
    elif args.experiment == "diversity":
        flat["mean_inter_generator_bleu"] = report["mean_inter_generator_bleu"]
        flat["union_distinct_translations"] = report["union"]["distinct_translations"]
    else:
        for k, v in report["ks_to_target"].items():
            flat[f"ks_{k}"] = v
    return flat


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="synthqe", description="Synthetic MQM-style quality-estimation data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-toy", help="train a toy translation model on a TSV corpus")
    p.add_argument("--parallel", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lines", help="START:END slice of the corpus to train on")
    p.add_argument("--em-iterations", type=int, default=DEFAULT_EM_ITERATIONS)
    p.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("generate", help="constrained beam search over a parallel corpus")
    _add_config_flags(p, ("parallel", "generator_ids", "output", *_DECODE_FLAGS, "seed"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("annotate", help="TER coarse labels + annotator rejudging")
    p.add_argument("--input", required=True)
    _add_config_flags(p, ("annotator_id", "output", "trees", *_THRESHOLD_FLAGS, "amateur",
                          "allow_self_annotation", "workers", "ter_trace", "spce_trace"))
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("spce", help="rebuild spans as dependency phrases")
    p.add_argument("--input", required=True)
    _add_config_flags(p, ("trees", "output", "spce_trace"))
    p.set_defaults(func=cmd_spce)

    p = sub.add_parser("pipeline", help="generate, annotate and aggregate in one go")
    _add_config_flags(p, ("parallel", "trees", "generator_ids", "annotator_id", *_THRESHOLD_FLAGS, "output",
                          *_DECODE_FLAGS, "seed", "amateur", "allow_self_annotation", "ter_trace", "spce_trace"))
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("calibrate", help="greedy grid search for severity thresholds")
    p.add_argument("--input", required=True, help="annotated validation JSONL with gold spans")
    _add_config_flags(p, ("trees", "grid_step", "output"))
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="compare predicted and gold records")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="analysis experiments")
    esub = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in ("self-annotation", "diversity"):
        e = esub.add_parser(name)
        _add_config_flags(e, ("parallel", "generator_ids", "annotator_id", *_THRESHOLD_FLAGS, *_DECODE_FLAGS,
                              "seed"))
        e.add_argument("--report")
        e.set_defaults(func=cmd_experiment)
    e = esub.add_parser("downsample")
    e.add_argument("--pool", required=True)
    e.add_argument("--target", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--selected", help="write the chosen pool records here")
    e.add_argument("--report")
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        summary = args.func(args)
    except InvalidInput as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    _emit(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
