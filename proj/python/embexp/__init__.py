"""Python access to the embexp C++ core."""

import json

from . import _core
from ._core import (
    ConfigError,
    EwcError,
    MetricError,
    OracleError,
    StageError,
    artifact_tree_hash,
    ewc_lora_penalty,
    ewc_lora_penalty_grad,
    ewc_penalty,
    fnv1a64_hex,
    lcs_normalized,
    lora_reparam,
    parse_path,
    rouge_l,
    rouge_tokens,
    run_collect,
    run_compile,
    run_validate,
)


def score_file(predictions, eval, jobs=1):
    """Per-task score reports as dicts."""
    return [json.loads(r) for r in _core.score_file(str(predictions), str(eval), jobs)]


def toy_continual_demo(seed=0, lambdas=(0.0, 0.5, 2.0)):
    """Regime comparison report as a dict."""
    return json.loads(_core.toy_continual_demo(seed, list(lambdas)))


__all__ = [
    "ConfigError",
    "EwcError",
    "MetricError",
    "OracleError",
    "StageError",
    "artifact_tree_hash",
    "ewc_lora_penalty",
    "ewc_lora_penalty_grad",
    "ewc_penalty",
    "fnv1a64_hex",
    "lcs_normalized",
    "lora_reparam",
    "parse_path",
    "rouge_l",
    "rouge_tokens",
    "run_collect",
    "run_compile",
    "run_validate",
    "score_file",
    "toy_continual_demo",
]
