"""Scenario files: a model literal plus an ordered list of tasks.

The format is JSON.  Time units are arbitrary but must be used consistently.
A single-queue scenario::

    {"name": "example",
     "model": {"type": "single_queue", "lam": 0.5,
               "service": {"kind": "exponential", "mean": 1},
               "vacation": {"kind": "deterministic", "value": 1},
               "glue": 1.0, "retrial_rate": 0.5},
     "tasks": [{"type": "analyze"}, {"type": "optimize", "tol": 1e-8}]}

A polling scenario uses ``{"type": "polling", "stations": [...]}``, each station
holding ``lam``, ``service``, ``switchover``, ``glue`` and ``retrial_rate``.  A
retrial rate may be the string ``"inf"``.

Parameter paths address numeric fields of the model literal with dots:
``glue``, ``vacation.mean``, ``stations.1.glue`` (0-based station index) or
``stations.*.glue`` (every station).  Setting ``<distribution>.mean`` rescales
a one-parameter distribution to that mean.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .distributions import Deterministic, from_dict, mean, to_dict
from .errors import DomainError
from .models import INFINITY, PollingModel, SingleQueueModel, Station

TASK_TYPES = ("analyze", "optimize", "simulate", "validate", "sweep")
_SQ_FIELDS = {"type", "lam", "service", "vacation", "glue", "retrial_rate"}
_ST_FIELDS = {"lam", "service", "switchover", "glue", "retrial_rate"}


@dataclass
class Task:
    type: str
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    model_literal: dict
    tasks: list

    @property
    def model(self):
        return build_model(self.model_literal)

    def model_with(self, overrides: dict | None = None, path: str | None = None, value=None):
        lit = merge(self.model_literal, overrides or {})
        if path is not None:
            lit = set_path(lit, path, value)
        return build_model(lit)


# --------------------------------------------------------------------------
# literals

def parse_rate(x) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity"):
            return INFINITY
        raise DomainError(f"rate must be a number or 'inf', got {x!r}")
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DomainError(f"rate must be a number or 'inf', got {x!r}")
    return float(x)


def _number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise DomainError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DomainError(f"{where}: field {key!r} must be a number, got {v!r}")
    return float(v)


def parse_distribution(obj) -> object:
    # a zero-mean vacation is the degenerate "no vacation" case whatever its nominal kind
    if isinstance(obj, dict) and obj.get("mean") == 0:
        return Deterministic(0.0)
    return from_dict(obj)


def build_model(lit: dict):
    if not isinstance(lit, dict):
        raise DomainError("model must be a JSON object")
    kind = lit.get("type", "single_queue")
    if kind == "single_queue":
        extra = set(lit) - _SQ_FIELDS
        if extra:
            raise DomainError(f"model: unknown fields {sorted(extra)}")
        for key in ("service", "vacation"):
            if key not in lit:
                raise DomainError(f"model: missing field {key!r}")
        return SingleQueueModel(_number(lit, "lam", "model"), parse_distribution(lit["service"]),
                                parse_distribution(lit["vacation"]), _number(lit, "glue", "model"),
                                parse_rate(lit.get("retrial_rate")))
    if kind == "polling":
        stations = lit.get("stations")
        if not isinstance(stations, list) or not stations:
            raise DomainError("model: 'stations' must be a nonempty list")
        out = []
        for i, s in enumerate(stations):
            where = f"station {i}"
            if not isinstance(s, dict):
                raise DomainError(f"{where}: must be a JSON object")
            extra = set(s) - _ST_FIELDS
            if extra:
                raise DomainError(f"{where}: unknown fields {sorted(extra)}")
            for key in ("service", "switchover"):
                if key not in s:
                    raise DomainError(f"{where}: missing field {key!r}")
            out.append(Station(_number(s, "lam", where), parse_distribution(s["service"]),
                               parse_distribution(s["switchover"]), _number(s, "glue", where),
                               parse_rate(s.get("retrial_rate"))))
        return PollingModel(tuple(out))
    raise DomainError(f"model type must be 'single_queue' or 'polling', got {kind!r}")


def _rate_literal(nu: float):
    return "inf" if math.isinf(nu) else nu


def model_literal(model) -> dict:
    """Inverse of :func:`build_model`."""
    if isinstance(model, SingleQueueModel):
        return {"type": "single_queue", "lam": model.lam, "service": to_dict(model.service),
                "vacation": to_dict(model.vacation), "glue": model.glue,
                "retrial_rate": _rate_literal(model.retrial_rate)}
    return {"type": "polling", "stations": [
        {"lam": s.lam, "service": to_dict(s.service), "switchover": to_dict(s.switchover),
         "glue": s.glue, "retrial_rate": _rate_literal(s.retrial_rate)} for s in model.stations]}


def merge(base: dict, over: dict) -> dict:
    """Deep merge of ``over`` into a copy of ``base``.

    Overriding a distribution's ``kind`` keeps only its ``mean`` so that a variant
    can switch e.g. an exponential vacation to a constant one of equal mean.
    """
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            if "kind" in v and v["kind"] != out[k].get("kind"):
                m = _literal_mean(out[k])
                out[k] = {} if m is None else {"mean": m}
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _literal_mean(d: dict):
    try:
        return mean(from_dict(d)) if not (isinstance(d, dict) and d.get("mean") == 0) else 0.0
    except (DomainError, TypeError, ValueError):
        return d.get("mean") if isinstance(d, dict) else None


# --------------------------------------------------------------------------
# parameter paths

def _resolve(lit, parts: list[str], path: str):
    """Containers and keys addressed by ``parts`` (several when a ``*`` is present)."""
    targets = [lit]
    for part in parts[:-1]:
        nxt = []
        for t in targets:
            if isinstance(t, list):
                if part == "*":
                    nxt.extend(t)
                    continue
                try:
                    nxt.append(t[int(part)])
                except (ValueError, IndexError):
                    raise DomainError(f"parameter path {path!r}: bad index {part!r}") from None
            elif isinstance(t, dict) and part in t:
                nxt.append(t[part])
            else:
                raise DomainError(f"parameter path {path!r} does not resolve at {part!r}")
        targets = nxt
    return targets, parts[-1]


def set_path(lit: dict, path: str, value: float) -> dict:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"parameter path {path!r}: value must be finite, got {value}")
    out = copy.deepcopy(lit)
    parts = path.split(".")
    targets, key = _resolve(out, parts, path)
    for t in targets:
        if not isinstance(t, dict):
            raise DomainError(f"parameter path {path!r} does not address a field")
        if key == "mean" and "kind" in t:
            kind = t["kind"]
            if kind not in ("deterministic", "exponential", "erlang"):
                raise DomainError(f"parameter path {path!r}: cannot set the mean of a {kind} distribution")
            for k in ("value", "rate", "mean"):
                t.pop(k, None)
            t["mean"] = value
            continue
        if key not in t:
            raise DomainError(f"parameter path {path!r} does not resolve at {key!r}")
        cur = t[key]
        if isinstance(cur, bool) or not (isinstance(cur, (int, float)) or cur in ("inf", "infinity")):
            raise DomainError(f"parameter path {path!r} addresses a non-numeric field")
        t[key] = value
    return out


def get_path(lit: dict, path: str):
    parts = path.split(".")
    targets, key = _resolve(lit, parts, path)
    vals = []
    for t in targets:
        if key == "mean" and isinstance(t, dict) and "kind" in t:
            vals.append(_literal_mean(t))
        elif isinstance(t, dict) and key in t:
            vals.append(t[key])
        else:
            raise DomainError(f"parameter path {path!r} does not resolve at {key!r}")
    return vals[0] if len(vals) == 1 else vals


def parse_grid(spec) -> list[float]:
    """A list of numbers, or ``{"linspace"|"geomspace": [start, stop, count]}``."""
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise DomainError("grid object needs exactly one of 'linspace', 'geomspace'")
        (kind, args), = spec.items()
        if kind not in ("linspace", "geomspace") or not isinstance(args, list) or len(args) != 3:
            raise DomainError("grid must be {'linspace'|'geomspace': [start, stop, count]}")
        a, b, k = args
        if int(k) != k or k < 1:
            raise DomainError("grid count must be a positive integer")
        if kind == "geomspace" and not (a > 0 and b > 0):
            raise DomainError("geomspace endpoints must be positive")
        vals = (np.linspace if kind == "linspace" else np.geomspace)(float(a), float(b), int(k))
        vals = [float(v) for v in vals]
    elif isinstance(spec, list):
        vals = []
        for v in spec:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise DomainError(f"grid values must be numbers, got {v!r}")
            vals.append(float(v))
    else:
        raise DomainError("grid must be a list or a linspace/geomspace object")
    if not vals:
        raise DomainError("grid must be nonempty")
    if not all(math.isfinite(v) for v in vals):
        raise DomainError("grid values must be finite")
    return vals


# --------------------------------------------------------------------------
# scenario files

def parse_scenario(obj) -> Scenario:
    if not isinstance(obj, dict):
        raise DomainError("scenario must be a JSON object")
    extra = set(obj) - {"name", "model", "tasks", "description"}
    if extra:
        raise DomainError(f"scenario: unknown fields {sorted(extra)}")
    name = obj.get("name")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise DomainError("scenario: 'name' must be a nonempty string without path separators")
    if "model" not in obj:
        raise DomainError("scenario: missing 'model'")
    lit = obj["model"]
    build_model(lit)  # validate eagerly
    tasks = []
    for i, t in enumerate(obj.get("tasks", [])):
        if not isinstance(t, dict) or t.get("type") not in TASK_TYPES:
            raise DomainError(f"task {i}: 'type' must be one of {TASK_TYPES}")
        params = {k: v for k, v in t.items() if k != "type"}
        tasks.append(Task(t["type"], params))
        _check_task(lit, tasks[-1], i)
    return Scenario(name, lit, tasks)


def _check_task(lit: dict, task: Task, i: int) -> None:
    p = task.params
    variants = p.get("variants", {})
    if not isinstance(variants, dict):
        raise DomainError(f"task {i}: 'variants' must map labels to model overrides")
    for label, over in variants.items():
        if not isinstance(over, dict):
            raise DomainError(f"task {i}: variant {label!r} must be an object")
        build_model(merge(lit, over))
    if task.type == "sweep" or "path" in p:
        if "path" not in p or "grid" not in p:
            raise DomainError(f"task {i}: a sweep needs 'path' and 'grid'")
        grid = parse_grid(p["grid"])
        set_path(lit, p["path"], grid[0])
    if task.type == "optimize":
        for key in ("g_lo", "g_hi", "tol"):
            v = p.get(key)
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise DomainError(f"task {i}: {key!r} must be a number")


def load_scenario(source: str) -> Scenario:
    """Parse a scenario file; ``builtin:<name>`` loads a shipped scenario."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        try:
            text = resources.files("gluepoll.scenarios").joinpath(f"{name}.json").read_text()
        except FileNotFoundError:
            raise DomainError(f"no shipped scenario named {name!r}; have {builtin_names()}") from None
    else:
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise DomainError(f"cannot read scenario file: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"scenario is not valid JSON: {exc}") from None
    return parse_scenario(obj)


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("gluepoll.scenarios").iterdir()
                  if p.name.endswith(".json"))
