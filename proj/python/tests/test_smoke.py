import json

import pytest

import tabext


def test_worked_example_patterns():
    texts = "Oktober - Dezember 2019 1,000 ST 70,63 70,63".split()
    assert [tabext.classify_text_pattern(t) for t in texts] == list("W?WNFWFF")
    assert tabext.line_block_regex(texts) == "W ? W N F W F F"


def test_clustering_and_tolerance():
    assert tabext.cluster_coordinates([100, 101, 300], 2) == [(0, 2), (0, 2), (1, 1)]
    assert tabext.default_alignment_tolerance(2480) == 10


def test_metrics_and_report():
    report = tabext.compute_metrics([1, 1, 0, 0], [1, 0, 1, 0])
    assert report["accuracy"] == 0.5
    assert report["classes"]["1"]["f1"] == 0.5
    text = tabext.render_report([1, 0], [1, 0], "t")
    assert "weighted avg" in text and text.startswith("t\n")


def test_errors_carry_their_kind():
    with pytest.raises(tabext.TabextError) as err:
        tabext.compute_metrics([1], [])
    assert err.value.kind == "LengthMismatch"
    with pytest.raises(tabext.TabextError) as err:
        tabext.parse_tsv("nonsense\n")
    assert err.value.kind == "MalformedHeader"


def test_invoice_parse_and_featurize():
    inv = tabext.generate_invoice({"seed": 3})
    doc = tabext.parse_tsv(inv["tsv"], "inv")
    rows = tabext.featurize_tsv(inv["tsv"], "inv")
    assert len(rows) == len(inv["labels"]) == sum(len(p["tokens"]) for p in doc["pages"])
    assert {r["TextPattern"] for r in rows} <= set("?WNFA")


def test_pipeline_round_trip(tmp_path):
    tabext.synth(10, tmp_path / "corpus", seed=2)
    rows = tabext.featurize(str(tmp_path / "corpus"), str(tmp_path / "f.jsonl"))
    assert rows > 0
    summary = tabext.train(tmp_path / "f.jsonl", tmp_path / "model", seed=3, max_epochs=3)
    assert len(summary["split"]["train"]) == 7
    assert summary["test"]["total"] > 0
    report = tabext.evaluate(summary["checkpoint"], tmp_path / "f.jsonl")
    assert report["total"] == rows
    tsv = sorted((tmp_path / "corpus").glob("*.tsv"))[0]
    n = tabext.predict(summary["checkpoint"], str(tsv), str(tmp_path / "overlay.json"))
    overlay = json.loads((tmp_path / "overlay.json").read_text())
    assert len(overlay["tokens"]) == n
