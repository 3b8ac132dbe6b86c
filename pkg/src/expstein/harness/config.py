"""Experiment configuration files.

A config is a TOML document with three tables::

    [run]
    experiment_id = "renyi-geometric"
    reps = 100000
    seed = 20240601
    outputs = ["out/renyi.csv"]        # optional; .json report written alongside

    [model]
    kind = "random-sum"
    n = { family = "geometric-from-1", params = [0.1] }
    x = { family = "point-mass", params = [1.0] }

    [bounds]
    requests = ["random-sum"]
    [bounds.random-sum]                # optional explicit inputs override derived ones
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..errors import ConfigError

SEED_MAX = 2**64


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    model: dict
    bound_requests: tuple  # ((bound_id, explicit_inputs), ...)
    reps: int
    seed: int
    outputs: tuple = ()
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def kind(self) -> str:
        return self.model["kind"]


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing {where}.{key}")
    return table[key]


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a parsed document (dict) into an :class:`ExperimentConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    run = _require(doc, "run", "config")
    model = _require(doc, "model", "config")
    if not isinstance(run, dict) or not isinstance(model, dict):
        raise ConfigError("[run] and [model] must be tables")
    eid = _require(run, "experiment_id", "run")
    if not isinstance(eid, str) or not eid:
        raise ConfigError("run.experiment_id must be a nonempty string")
    reps = run.get("reps", 10_000)
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        raise ConfigError("run.reps must be an integer >= 1")
    seed = run.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_MAX:
        raise ConfigError("run.seed must be an integer in [0, 2^64)")
    outputs = run.get("outputs", [])
    if isinstance(outputs, str):
        outputs = [outputs]
    if "kind" not in model or not isinstance(model["kind"], str):
        raise ConfigError("model.kind must be a string")
    bounds = doc.get("bounds", {})
    if not isinstance(bounds, dict):
        raise ConfigError("[bounds] must be a table")
    reqs = bounds.get("requests", [])
    if not isinstance(reqs, list) or not all(isinstance(r, str) for r in reqs):
        raise ConfigError("bounds.requests must be a list of bound ids")
    if len(set(reqs)) != len(reqs):
        raise ConfigError("bounds.requests lists a bound id twice")
    requests = []
    for r in reqs:
        extra = bounds.get(r, {})
        if not isinstance(extra, dict):
            raise ConfigError(f"bounds.{r} must be a table of inputs")
        requests.append((r, dict(extra)))
    return ExperimentConfig(eid, dict(model), tuple(requests), int(reps), int(seed),
                            tuple(str(o) for o in outputs), copy.deepcopy(doc))


def loads(text: str) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return parse_config(doc)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def with_overrides(cfg: ExperimentConfig, seed: int | None = None, reps: int | None = None) -> ExperimentConfig:
    doc = copy.deepcopy(cfg.raw)
    if seed is not None:
        doc["run"]["seed"] = seed
    if reps is not None:
        doc["run"]["reps"] = reps
    return parse_config(doc)


def set_path(doc: dict, path: str, value: Any) -> dict:
    """Copy of ``doc`` with the dotted ``path`` (list indices allowed) set to ``value``."""
    doc = copy.deepcopy(doc)
    parts = path.split(".")
    node = doc
    try:
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            if last not in node:
                raise KeyError(last)
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ConfigError(f"parameter path {path!r} not found in the config") from exc
    return doc
