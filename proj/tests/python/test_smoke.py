import math
import re

import pytest

import llmceg


def tiny_config(tmp_path):
    cfg = llmceg.default_config()
    cfg["data"].update(n_records=60, n_members=30, n_nonmembers=20, n_general=10, n_pretrain=40)
    cfg["model"].update(d_model=16, n_layers=1, n_heads=2)
    cfg["pretrain"]["epochs"] = 1
    cfg["train"]["epochs"] = 2
    cfg["privacy"]["sweep_epsilons"] = [8.0]
    cfg["output_dir"] = str(tmp_path)
    cfg["verbose"] = False
    cfg["workers"] = 1
    return cfg


def test_records_are_deterministic_and_well_formed():
    a = llmceg.generate_records(20, seed=7)
    b = llmceg.generate_records(20, seed=7)
    assert [llmceg.serialize_record(r) for r in a] == [llmceg.serialize_record(r) for r in b]
    for r in a:
        assert llmceg.is_valid_ssn(r.ssn)
        assert 18 <= r.age <= 90
        assert r.name in llmceg.serialize_record(r)


def test_split_is_disjoint():
    records = llmceg.generate_records(50, seed=1)
    members, nonmembers, msrc, nsrc = llmceg.split_corpus(records, 30, 20, seed=1)
    assert len(members) == 30 and len(nonmembers) == 20
    assert not set(msrc) & set(nsrc)
    with pytest.raises(llmceg.LlmcegError):
        llmceg.split_corpus(records, 40, 20)


def test_calibration_round_trip():
    cal = llmceg.calibrate_sigma(2.0, q=8 / 300, steps=380)
    eps, order = llmceg.epsilon_spent(cal["sigma"], 8 / 300, 380)
    assert eps <= 2.0 * 1.001
    assert eps == pytest.approx(2.0, rel=0.01)
    assert order > 1
    assert llmceg.rdp_step(1.0, 1.0, 2.0) == pytest.approx(1.0)


def test_clip_and_laplace():
    clipped = llmceg.clip_gradient([3.0, 4.0], 1.0)
    assert clipped == pytest.approx([0.6, 0.8])
    assert llmceg.clip_gradient([0.3, 0.4], 1.0) == pytest.approx([0.3, 0.4])
    value, scale = llmceg.laplace_mechanism(10.0, 1.0, 0.5, seed=3)
    assert scale == pytest.approx(2.0)
    assert math.isfinite(value)


def test_attack_metrics():
    members = [0.1, 0.2, 0.3]
    nonmembers = [1.0, 1.1, 1.2]
    r = llmceg.attack(members, nonmembers)
    assert r["advantage"] == pytest.approx(0.5)
    assert llmceg.auroc(members, nonmembers) == pytest.approx(1.0)
    assert llmceg.loss_gap(members, nonmembers) == pytest.approx(0.9)
    assert llmceg.auroc([1.0], [1.0]) == pytest.approx(0.5)


def test_gauge():
    assert llmceg.utility_score(150.4, 100.0) == pytest.approx(100.0 * 100.0 / 150.4)
    assert llmceg.check_acceptable(0.105, 0.10)
    assert not llmceg.check_acceptable(0.001, 0.0)
    assert llmceg.judge(0.2, 100.0) == "privacy_fail"
    front = llmceg.pareto_frontier(
        [
            {"label": "baseline", "epsilon": math.inf, "advantage": 0.2, "utility_score": 100.0},
            {"label": "a", "epsilon": 2.0, "advantage": 0.05, "utility_score": 80.0},
            {"label": "b", "epsilon": 1.0, "advantage": 0.06, "utility_score": 70.0},
        ]
    )
    assert {p["label"] for p in front} == {"baseline", "a"}
    assert any(p["epsilon"] == math.inf for p in front)


def test_untrained_model_perplexity(tmp_path):
    path = str(tmp_path / "init.bin")
    digest = llmceg.init_model(path, d_model=16, n_layers=1, n_heads=2, seed=1)
    assert re.fullmatch(r"[0-9a-f]{64}", digest)
    ppl = llmceg.perplexity(path, ["hello world"])
    assert 100 < ppl < 700
    assert len(llmceg.sample_losses(path, ["a", "b"])) == 2


def test_pipeline_end_to_end(tmp_path):
    cfg = tiny_config(tmp_path)
    assert llmceg.gen_data(cfg).endswith("data_manifest.json")
    model = llmceg.train(cfg, epsilon=8.0)
    mia = llmceg.attack_model(model, cfg)
    assert 0.0 <= mia["auroc"] <= 1.0
    csv = llmceg.sweep(cfg)
    assert len(csv.strip().splitlines()) == 3
    cfg["privacy"]["thresholds"]["t_p"] = 0.0
    report = llmceg.audit(cfg)
    assert report["verdict"] == "infeasible"
