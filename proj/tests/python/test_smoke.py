import json
import math
import os
import pathlib

import pytest

import recipebench as rb

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def test_bleu_hand_case_and_identity():
    assert rb.corpus_bleu(["a b c d"], ["a b c d e"]) == pytest.approx(100 * math.exp(-0.25), abs=1e-12)
    assert rb.corpus_bleu(["鍋で煮る"], ["鍋で煮る"]) == 100.0
    with pytest.raises(rb.DataError):
        rb.corpus_bleu([""], [""])


def test_rouge_lcs_perplexity():
    p, r, f = rb.rouge_l("a b c d", "a c d e")
    assert (p, r, f) == (0.75, 0.75, 0.75)
    assert rb.lcs_length(list("abcbdab"), list("bdcaba")) == 4
    assert rb.corpus_perplexity([[0.0, 0.0]]) == pytest.approx(1.0, abs=1e-12)
    assert rb.corpus_perplexity([[-math.log(2)] * 3]) == pytest.approx(2.0, abs=1e-12)


def test_tokenize_and_nfkc():
    assert rb.tokenize("豚肉を100g切る") == ["豚肉", "を", "100", "g", "切", "る"]
    assert rb.nfkc("ＡＢＣ１２３") == "ABC123"
    with pytest.raises(rb.ConfigError):
        rb.tokenize("x", "no-such-tokenizer")


def test_micro_set_metrics():
    m = rb.micro_set_metrics([(2, 1, 1), (0, 3, 1)])
    assert m["precision"] == 2 / 6
    assert m["recall"] == 2 / 4
    assert m["iou"] == 2 / 8
    assert rb.micro_set_metrics([(0, 0, 0)])["degenerate"]


def test_render_then_parse():
    recipe = {
        "id": "r1",
        "title": "肉じゃが",
        "ingredients": [{"name": "じゃがいも", "quantity": "3個"}, {"name": "塩", "quantity": ""}],
        "steps": ["切る", "煮る"],
        "image": "img/r1.jpg",
        "category": ["煮物"],
    }
    text = rb.render_recipe_text(recipe)
    parsed = rb.parse_generated(text)
    assert parsed["classification"] == "completed"
    assert parsed["element_errors"] == []
    assert parsed["title"] == "肉じゃが"
    assert parsed["steps"] == ["切る", "煮る"]


def test_repetition_detection():
    d = rb.detect_repetition("a b c b c b c b c")
    assert d["loop_detected"]
    assert d["period_tokens"] == 2
    with pytest.raises(rb.DataError):
        rb.detect_repetition("a", min_repeats=1)


def test_judge_offline_and_verdict_parsing():
    v = rb.judge_offline(["ご飯", "醤油", "トマト"], ["ごはん", "しょうゆ"], lexicon=["しょうゆ"],
                         synonyms={"ごはん": ["ご飯"], "しょうゆ": ["醤油"]})
    assert len(v["matched"]) == 2
    assert [u["item"] for u in v["generated_only"]] == ["トマト"]
    assert v["truth_only"] == []

    response = json.dumps({"common": [{"generated": "卵", "truth": "たまご", "seasoning": False}],
                           "only_generated": [], "only_truth": [{"item": "塩", "seasoning": True}]})
    parsed = rb.parse_verdict("```json\n" + response + "\n```", ["卵"], ["たまご", "塩"], lexicon=["塩"])
    assert parsed["matched"][0]["truth"] == "たまご"
    invented = json.dumps({"common": [], "only_generated": [{"item": "トリュフ", "seasoning": False}],
                           "only_truth": []})
    with pytest.raises(rb.VerdictError):
        rb.parse_verdict(invented, [], [])
    assert "{generated}" not in rb.build_judge_prompt(["a"], ["b"])


def test_split_by_category_is_deterministic():
    recipes = [{"id": f"r{i:03d}", "title": "t", "ingredients": [{"name": "x", "quantity": ""}], "steps": ["s"],
                "image": f"img/{i}.jpg", "category": [f"c{i % 3}"]} for i in range(30)]
    train, test = rb.split_by_category(recipes, 0.2, 7)
    assert len(test) == 6
    assert sorted(train + test) == sorted(r["id"] for r in recipes)
    assert rb.split_by_category(recipes, 0.2, 7) == (train, test)


def test_cli_offline_evaluate(tmp_path):
    e2e = FIXTURES / "e2e"
    code = rb.run_cli(["--config", e2e / "config.json", "--out", tmp_path, "evaluate",
                       "--generated", e2e / "generated.jsonl", "--logprobs", e2e / "logprobs.jsonl"])
    assert code == 0
    assert (tmp_path / "report.json").read_bytes() == (e2e / "golden" / "report.json").read_bytes()
    assert rb.run_cli(["--config", tmp_path / "missing.json", "prepare"]) == 2
