import json
import os

import pytest

import pyforge


def docs():
    return [
        {"text": "The study measured variance across every sample in the cohort.", "meta": {"lang": "en"}},
        {"text": "The study measured variance across every sample in the cohort.", "meta": {"lang": "en"}},
        {"text": "see http://spam.example now", "meta": {"lang": "en"}},
        {"text": "short", "meta": {"lang": "de"}},
    ]


def test_ops_catalog():
    ops = pyforge.list_ops()
    assert len(ops) >= 18
    names = {o["name"] for o in ops}
    assert {"clean_links", "word_count_filter", "minhash_lsh"} <= names
    assert all("code" in o["tags"] for o in pyforge.list_ops("code"))


def test_jsonl_round_trip(tmp_path):
    path = tmp_path / "d.jsonl"
    pyforge.write_jsonl(docs(), path)
    back = pyforge.read_jsonl(path)
    assert [d["text"] for d in back] == [d["text"] for d in docs()]
    assert back[3]["meta"] == {"lang": "de"}


def test_run_recipe_and_plan(tmp_path):
    src = tmp_path / "in.jsonl"
    pyforge.write_jsonl(docs(), src)
    recipe = tmp_path / "r.yaml"
    recipe.write_text(
        f"dataset_path: {src}\nexport_path: {tmp_path / 'out.jsonl'}\n"
        "process:\n  - clean_links\n  - word_count_filter: {min: 3}\n  - exact_hash\n"
    )
    assert "word_count_filter" in pyforge.describe_plan(recipe)
    manifest = pyforge.run_recipe(recipe)
    assert manifest["output_samples"] == 1
    out = [json.loads(line) for line in open(tmp_path / "out.jsonl")]
    assert len(out) == 1
    overridden = pyforge.run_recipe(recipe, ["word_count_filter.min=1"])
    assert overridden["output_samples"] == 3


def test_errors_surface_as_forge_error():
    with pytest.raises(pyforge.ForgeError):
        pyforge.parse_recipe("dataset_path: x\nprocess:\n  - not_an_op\n")


def test_space_plan():
    p = pyforge.plan_space(5, 8, 1, 10**9)
    assert p["cache_bytes"] == 16 * 10**9
    assert p["checkpoint_peak_bytes"] == 3 * 10**9


def test_analyze_and_dedup():
    report = pyforge.analyze(docs(), ["word_count"])
    assert report["samples"] == 4
    kept, pairs = pyforge.dedup_exact(docs())
    assert len(kept) == 3 and pairs[0][:2] == (0, 1)
    kept, _ = pyforge.dedup_minhash(docs())
    assert len(kept) == 3
    assert pyforge.jaccard("a b c d e f", "a b c d e f") == 1.0


def test_quality_model(tmp_path):
    good = ["careful proof of the lemma with evidence"] * 40
    bad = ["click now free winner cheap deal"] * 40
    model = pyforge.train_quality(good, bad, h=12)
    assert model.eval["f1"] == 1.0
    assert model.score("proof lemma evidence") > 0.5 > model.score("free winner click")
    model.save(tmp_path / "m.bin")
    again = pyforge.load_quality_model(tmp_path / "m.bin")
    assert again.score("proof") == model.score("proof")


def test_objective():
    assert pyforge.objective_mix_quality(500, 1000, 0.8) == pytest.approx(1.3)
