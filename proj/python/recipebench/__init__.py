"""Python bindings for the recipebench C++ core."""

import json

from . import _core
from ._core import (
    ConfigError,
    DataError,
    Error,
    IoError,
    NetworkError,
    VerdictError,
    build_judge_prompt,
    corpus_bleu,
    corpus_perplexity,
    lcs_length,
    nfkc,
    rouge_l,
    tokenize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "IoError",
    "NetworkError",
    "VerdictError",
    "build_judge_prompt",
    "corpus_bleu",
    "corpus_perplexity",
    "detect_repetition",
    "judge_offline",
    "lcs_length",
    "micro_set_metrics",
    "nfkc",
    "parse_generated",
    "parse_verdict",
    "render_recipe_text",
    "rouge_l",
    "run_cli",
    "split_by_category",
    "tokenize",
]


def parse_generated(text, templates=None):
    return json.loads(_core.parse_generated_json(text, json.dumps(templates) if templates else ""))


def detect_repetition(text, min_repeats=3, window_tokens=64):
    return json.loads(_core.detect_repetition_json(text, min_repeats, window_tokens))


def micro_set_metrics(counts):
    """counts: iterable of (tp, fp, fn)."""
    return json.loads(_core.micro_set_metrics_json(list(counts)))


def judge_offline(generated, truth, lexicon=(), synonyms=None):
    return json.loads(_core.judge_offline_json(list(generated), list(truth), list(lexicon), dict(synonyms or {})))


def parse_verdict(response, generated, truth, lexicon=()):
    return json.loads(_core.parse_verdict_json(response, list(generated), list(truth), list(lexicon)))


def render_recipe_text(recipe):
    return _core.render_recipe_text(json.dumps(recipe, ensure_ascii=False))


def split_by_category(recipes, test_fraction, seed):
    lines = "\n".join(json.dumps(r, ensure_ascii=False) for r in recipes)
    out = json.loads(_core.split_by_category_json(lines, test_fraction, seed))
    return out["train"], out["test"]


def run_cli(args):
    return _core.run_cli([str(a) for a in args])
