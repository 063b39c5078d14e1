"""Match a large synthetic pool to the error-rate distribution of a smaller target set."""

import argparse
import os

from _setup import prepare
from synthqe.config import PipelineConfig
from synthqe.core import read_jsonl
from synthqe.experiments import report_json, run_downsample_experiment, write_report
from synthqe.pipeline import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="runs/downsample")
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--report", default=None)
    args = ap.parse_args()

    # pool: a weak generator annotated by the strong model; target: a stronger generator's output
    paths = prepare(args.workdir, args.pairs, args.seed,
                    {"weak": (0, 100), "mid": (0, 600), "A": (0, args.pairs)}, (1000, 1600))
    common = dict(parallel=paths["pairs"], thresholds=paths["thresholds"], annotator_id=paths["A"], seed=args.seed)
    pool_path = os.path.join(args.workdir, "pool.jsonl")
    target_path = os.path.join(args.workdir, "target.jsonl")
    run_pipeline(PipelineConfig(generator_ids=[paths["weak"]], output=pool_path, **common))
    run_pipeline(PipelineConfig(generator_ids=[paths["mid"]], output=target_path, **common))
    _, report = run_downsample_experiment(read_jsonl(pool_path), read_jsonl(target_path)[:150], args.k, args.seed)
    if args.report:
        write_report(args.report, report)
    print(report_json(report), end="")


if __name__ == "__main__":
    main()
