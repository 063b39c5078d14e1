"""Error rate of self- vs cross-annotation with a small (M) and a large (L) toy model."""

import argparse

from _setup import prepare
from synthqe.config import PipelineConfig
from synthqe.experiments import report_json, run_self_annotation_experiment, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="runs/self_annotation")
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--small", type=int, default=200, help="training pairs for M")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--report", default=None)
    args = ap.parse_args()

    half = args.pairs // 2
    paths = prepare(args.workdir, args.pairs, args.seed, {"M": (0, args.small), "L": (0, args.pairs)},
                    (half, half + 200))
    cfg = PipelineConfig(parallel=paths["pairs"], thresholds=paths["thresholds"],
                         generator_ids=[paths["M"], paths["L"]], seed=args.seed)
    report = run_self_annotation_experiment(cfg)
    if args.report:
        write_report(args.report, report)
    print(report_json(report), end="")


if __name__ == "__main__":
    main()
