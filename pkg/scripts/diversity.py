"""Inter-generator BLEU and union statistics for generators trained on disjoint splits."""

import argparse

from _setup import prepare
from synthqe.config import PipelineConfig
from synthqe.experiments import report_json, run_diversity_experiment, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="runs/diversity")
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--generators", type=int, default=3)
    ap.add_argument("--split", type=int, default=300, help="training pairs per generator")
    ap.add_argument("--tau", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--report", default=None)
    args = ap.parse_args()

    splits = {f"G{i}": (i * args.split, (i + 1) * args.split) for i in range(args.generators)}
    splits["A"] = (0, args.pairs)
    start = args.generators * args.split
    paths = prepare(args.workdir, args.pairs, args.seed, splits, (start, start + 200))
    cfg = PipelineConfig(parallel=paths["pairs"], thresholds=paths["thresholds"], annotator_id=paths["A"],
                         generator_ids=[paths[f"G{i}"] for i in range(args.generators)],
                         cbs_tau=args.tau, seed=args.seed)
    report = run_diversity_experiment(cfg)
    if args.report:
        write_report(args.report, report)
    print(report_json(report), end="")


if __name__ == "__main__":
    main()
