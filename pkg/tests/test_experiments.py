import shutil

import pytest

from synthqe.config import PipelineConfig
from synthqe.core import InvalidInput, MqmRecord, read_jsonl
from synthqe.experiments import (
    report_json,
    run_diversity_experiment,
    run_downsample_experiment,
    run_self_annotation_experiment,
)
from synthqe.pipeline import run_pipeline


def cfg(ws, gens, **kw):
    return PipelineConfig(parallel=ws["tsv"], generator_ids=gens, thresholds=ws["th"], **kw)


def test_self_annotation_direction(workspace):
    rep = run_self_annotation_experiment(cfg(workspace, [workspace["L"], workspace["M"]]))
    kinds = [(c["kind"], c["generator"], c["annotator"]) for c in rep["conditions"]]
    assert kinds == [("self", "M", "M"), ("self", "L", "L"), ("cross", "M", "L")]
    self_m, cross = rep["conditions"][0]["error_rate"], rep["conditions"][-1]["error_rate"]
    assert self_m < cross
    assert rep["cross_minus_self"] == pytest.approx(cross - self_m)


def test_self_annotation_identical_models(workspace, tmp_path):
    twin = tmp_path / "M2.json"
    shutil.copy(workspace["M"], twin)
    rep = run_self_annotation_experiment(cfg(workspace, [workspace["M"], str(twin)]))
    rates = [c["error_rate"] for c in rep["conditions"]]
    assert rates[0] == rates[1] == rates[2]
    with pytest.raises(InvalidInput):
        run_self_annotation_experiment(cfg(workspace, [workspace["M"]]))


def test_reports_are_byte_identical(workspace):
    c = cfg(workspace, [workspace["M"], workspace["K"]], annotator_id=workspace["L"])
    assert report_json(run_diversity_experiment(c)) == report_json(run_diversity_experiment(c))
    assert report_json(run_self_annotation_experiment(c)) == report_json(run_self_annotation_experiment(c))


def test_diversity(workspace, tmp_path):
    twin = tmp_path / "M2.json"
    shutil.copy(workspace["M"], twin)
    same = run_diversity_experiment(cfg(workspace, [workspace["M"], str(twin)], annotator_id=workspace["L"]))
    assert same["inter_generator_bleu"][0]["bleu"] == pytest.approx(100.0)
    assert same["union"]["distinct_translations"] == same["generators"][0]["distinct_translations"]

    rep = run_diversity_experiment(cfg(workspace, [workspace["M"], workspace["K"]], annotator_id=workspace["L"],
                                       cbs_tau=2.0))
    assert rep["mean_inter_generator_bleu"] < 100.0
    assert all(rep["union"]["distinct_translations"] >= g["distinct_translations"] for g in rep["generators"])
    assert rep["union"]["records"] == sum(g["records"] for g in rep["generators"])
    with pytest.raises(InvalidInput):
        run_diversity_experiment(cfg(workspace, [workspace["M"], workspace["K"]]))


def _records_with_rates(bad_counts, n=10):
    out = []
    for b in bad_counts:
        labels = ["BAD"] * b + ["OK"] * (n - b)
        out.append(MqmRecord(src=["s"], mt=["t"] * n, labels=labels, score=0.0))
    return out


def test_downsample_experiment():
    pool = _records_with_rates([0, 0, 0, 0, 1, 1, 2, 3, 5, 8, 9, 10] * 5)
    target = _records_with_rates([0, 1, 1, 2])
    picked, rep = run_downsample_experiment(pool, target, 8, seed=4)
    assert len(set(picked)) == 8
    assert rep["ks_to_target"]["matched"] <= rep["ks_to_target"]["random"]
    assert rep["mean_rate"]["matched"] <= 25.0
    assert run_downsample_experiment(pool, target, 8, seed=4)[0] == picked
    with pytest.raises(InvalidInput):
        run_downsample_experiment(pool, [], 3, seed=0)
    with pytest.raises(InvalidInput):
        run_downsample_experiment(pool, target, 0, seed=0)


def test_downsample_on_pipeline_output(workspace, tmp_path):
    c = cfg(workspace, [workspace["M"], workspace["K"]], annotator_id=workspace["L"],
            output=str(tmp_path / "pool.jsonl"))
    run_pipeline(c)
    pool = read_jsonl(c.output)
    picked, rep = run_downsample_experiment(pool, pool[:10], 10, seed=1)
    assert rep["pool_records"] == len(pool) and len(picked) == 10


def test_diversity_disjoint_splits(workspace, tmp_path):
    from synthqe.toymodel import train_toy_model

    corpus = workspace["corpus"]
    a, b = tmp_path / "A.json", tmp_path / "B.json"
    train_toy_model(corpus[:100]).save(a)
    train_toy_model(corpus[100:200]).save(b)
    rep = run_diversity_experiment(cfg(workspace, [str(a), str(b)], annotator_id=workspace["L"], cbs_tau=2.0))
    assert rep["inter_generator_bleu"][0]["bleu"] < 100.0
