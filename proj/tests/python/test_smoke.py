import math

import pytest

import hakg

TOY_KG = (
    "Mike\tuser\tinteraction\tMcDonald's\tbusiness\n"
    "May\tuser\tinteraction\tMcDonald's\tbusiness\n"
    "May\tuser\tinteraction\tKFC\tbusiness\n"
    "Amy\tuser\tfriendship\tMay\tuser\n"
    "KFC\tbusiness\tlocation\tSunCity\tcity\n"
    "McDonald's\tbusiness\tlocation\tSunCity\tcity\n"
)


def test_parse_kg_counts():
    kg = hakg.parse_kg(TOY_KG)
    assert kg.entity_count == 6
    assert kg.type_count == 3
    assert kg.relation_count == 3
    assert kg.link_count == 6
    assert kg.type_of("SunCity") == "city"


def test_paths_start_at_user_and_end_at_item():
    kg = hakg.parse_kg(TOY_KG)
    paths = hakg.sample_paths(kg, "Mike", "KFC", paths=10, max_len=4, seed=3)
    assert paths
    for p in paths:
        assert p[0] == "Mike" and p[-1] == "KFC"
        assert len(p) % 2 == 1
    sg = hakg.build_subgraph(kg, "Mike", "KFC", seed=3)
    assert sg["entities"][:2] == ["Mike", "KFC"]


def test_metrics_and_ranks():
    m = hakg.metrics_at_n(3, 10)
    assert m["hit"] == 1.0
    assert m["ndcg"] == pytest.approx(0.5)
    assert m["mrr"] == pytest.approx(1 / 3)
    assert hakg.metrics_at_n(11, 10)["hit"] == 0.0
    assert hakg.pessimistic_rank(0.5, [0.9, 0.5, 0.1]) == 3


def test_variant_layouts():
    assert hakg.variants() == ["full", "-t", "-r", "-a", "-g", "max", "att"]
    full = dict(hakg.parameter_shapes("full", 10, 3, 4))
    no_rel = dict(hakg.parameter_shapes("-r", 10, 3, 4))
    assert full["prop1.w1"] == [128, 160]
    assert no_rel["prop1.w1"] == [128, 128]
    assert "init.weight" not in dict(hakg.parameter_shapes("-t", 10, 3, 4))


def test_bad_input_raises():
    with pytest.raises(hakg.HakgError):
        hakg.parse_kg("a\tb\tc\n")


def test_pipeline_round_trip(tmp_path):
    hakg.write_synthetic(tmp_path, users=10, items=10, blocks=2, seed=1)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "kg = kg.tsv\ninteractions = interactions.tsv\nworkdir = work\nseed = 4\n"
        "d_e = 8\nd_t = 4\nd_r = 4\nd_a = 8\nheads = 2\nmax_iter = 2\neval_negatives = 20\n"
    )
    assert hakg.prepare(cfg) == 30
    assert hakg.build_subgraphs(cfg) > 0
    losses = hakg.train(cfg, {"variant": "att"})
    assert len(losses) == 2 and all(math.isfinite(x) for x in losses)
    report = hakg.evaluate(cfg, {"groups": "2"})
    assert report["users"] == 10
    assert len(report["hit"]) == 15
    assert sorted(report["groups"]) == [0, 1]
    ck = hakg.load_checkpoint(tmp_path / "work" / "model.hkgm")
    assert ck["variant"] == "att"
    assert ck["dims"] == [8, 4, 4, 8, 2, 2]
    assert ck["params"]["attn.context"]["shape"] == [8]
    metrics = (tmp_path / "work" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "N,hit,ndcg,mrr,group"


def test_cli_exit_codes(tmp_path):
    code, out, _ = hakg.run_cli(["--help"])
    assert code == 0 and "prepare" in out
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 1\nkg = missing.tsv\n")
    code, _, err = hakg.run_cli(["prepare", "--config", str(cfg), "--set", "colour=red"])
    assert code == 2 and "colour" in err
