"""Privacy-utility audit for small causal language models."""

import json as _json

from ._llmceg import (
    LlmcegError,
    PiiRecord,
    auroc,
    check_acceptable,
    clip_gradient,
    epsilon_spent,
    generate_general_corpus,
    generate_records,
    init_model,
    is_valid_ssn,
    judge,
    laplace_mechanism,
    loss_gap,
    perplexity,
    rdp_step,
    sample_losses,
    serialize_record,
    split_corpus,
    utility_score,
)
from . import _llmceg

__all__ = [
    "LlmcegError",
    "PiiRecord",
    "attack",
    "attack_model",
    "audit",
    "auroc",
    "calibrate_sigma",
    "check_acceptable",
    "clip_gradient",
    "default_config",
    "epsilon_spent",
    "gen_data",
    "generate_general_corpus",
    "generate_records",
    "init_model",
    "is_valid_ssn",
    "judge",
    "laplace_mechanism",
    "loss_gap",
    "pareto_frontier",
    "perplexity",
    "rdp_step",
    "sample_losses",
    "serialize_record",
    "split_corpus",
    "sweep",
    "train",
    "utility_score",
]


def _dump(config):
    return "" if config is None else _json.dumps(config)


def default_config():
    return _json.loads(_llmceg._default_config())


def calibrate_sigma(epsilon, q, steps, delta=1e-5, conversion="improved"):
    """Smallest noise multiplier whose accounted epsilon stays within the target."""
    return _json.loads(_llmceg._calibrate_sigma(epsilon, delta, q, steps, conversion))


def attack(member_losses, nonmember_losses):
    """Best-threshold loss attack summary: advantage, AUROC, loss gap."""
    return _json.loads(_llmceg._attack(list(member_losses), list(nonmember_losses)))


def _encode_number(v):
    if isinstance(v, float) and v != v:
        return "nan"
    if v in (float("inf"), float("-inf")):
        return "inf" if v > 0 else "-inf"
    return v


def _decode_number(v):
    return float(v) if isinstance(v, str) else v


def pareto_frontier(points):
    """points: dicts with label, epsilon, advantage, utility_score."""
    encoded = [{k: _encode_number(v) for k, v in p.items()} for p in points]
    front = _json.loads(_llmceg._pareto_frontier(_json.dumps(encoded)))
    for p in front:
        p["epsilon"] = _decode_number(p["epsilon"])
    return front


def gen_data(config=None):
    return _llmceg._gen_data(_dump(config))


def train(config=None, epsilon=None):
    return _llmceg._train(_dump(config), epsilon)


def attack_model(model_path, config=None):
    return _json.loads(_llmceg._attack_model(_dump(config), str(model_path)))


def audit(config=None):
    return _json.loads(_llmceg._audit(_dump(config)))


def sweep(config=None):
    """Runs the sweep and returns the Pareto CSV text."""
    return _llmceg._sweep(_dump(config))
