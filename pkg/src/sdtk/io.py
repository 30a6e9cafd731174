"""Loading system, gain, network and signal files; trajectory CSV export."""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import linalg
from .errors import ConfigurationError
from .model import SwitchedDelayPlant, Trajectory
from .signals import Edge, NetworkGraph, signal_from_config

SIG_DIGITS = 12


def fmt(x) -> str:
    """Number formatted with 12 significant digits ('.' separator, no locale)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), f".{SIG_DIGITS}g")


def jsonable(obj):
    """Convert verdict dictionaries (Fractions, arrays, tuples) to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return float(fmt(obj))
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True)


class _FloatSeen:
    def __init__(self):
        self.seen = False

    def __call__(self, text: str) -> Fraction:
        self.seen = True
        return Fraction(text)


def read_json(path) -> tuple[Any, bool]:
    """Parse ``path`` with float literals kept as exact Fractions.

    Returns the data and whether any float literal occurred.
    """
    hook = _FloatSeen()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text, parse_float=hook)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc
    return data, hook.seen


def _arith(declared, floats_seen: bool, override: str | None) -> str:
    choice = override or declared or (linalg.FLOAT if floats_seen else linalg.RATIONAL)
    if choice not in (linalg.RATIONAL, linalg.FLOAT):
        raise ConfigurationError(f"arithmetic must be 'rational' or 'float', got {choice!r}")
    return choice


def plant_from_dict(data: dict, *, floats_seen: bool = False, arith: str | None = None, strict: bool = True) -> SwitchedDelayPlant:
    if not isinstance(data, dict):
        raise ConfigurationError("system file must hold a JSON object")
    for key in ("A", "B", "delays"):
        if key not in data:
            raise ConfigurationError(f"system file lacks {key!r}")
    if data.get("arrival", "sum") != "sum":
        raise ConfigurationError(f"unsupported arrival semantics {data['arrival']!r} (only 'sum')")
    mode = _arith(data.get("arithmetic"), floats_seen, arith)
    return SwitchedDelayPlant(data["A"], data["B"], tuple(data["delays"]), int(data.get("lookahead", 0)), mode, strict)


def load_system(path, arith: str | None = None, strict: bool = True) -> SwitchedDelayPlant:
    data, seen = read_json(path)
    return plant_from_dict(data, floats_seen=seen, arith=arith, strict=strict)


@dataclass(frozen=True)
class GainSpec:
    """Parsed gain file.

    ``kind`` is ``"di"`` (one matrix ``K``), ``"dd"`` (gains keyed by delay
    words) or ``"example3"`` (memory controller ``k1 x(t-1) + k2 x(t)``, where
    list-valued ``k1``/``k2`` request a grid sweep).
    """

    kind: str
    K: Any = None
    gains: dict | None = None
    k1: tuple = ()
    k2: tuple = ()

    @property
    def is_sweep(self) -> bool:
        return self.kind == "example3" and (len(self.k1) > 1 or len(self.k2) > 1)


def _grid(v) -> tuple:
    if isinstance(v, dict):
        lo, hi, num = v["start"], v["stop"], int(v["num"])
        return tuple(float(x) for x in np.linspace(float(lo), float(hi), num))
    if isinstance(v, list):
        return tuple(v)
    return (v,)


def gain_from_dict(data: dict) -> GainSpec:
    if not isinstance(data, dict):
        raise ConfigurationError("gain file must hold a JSON object")
    if "K" in data:
        return GainSpec("di", K=data["K"])
    if "dd" in data:
        gains = {}
        for key, K in data["dd"].items():
            word = tuple(int(s) for s in str(key).replace(" ", "").split(",") if s != "")
            gains[word] = K
        return GainSpec("dd", gains=gains)
    if "example3" in data:
        e = data["example3"]
        return GainSpec("example3", k1=_grid(e.get("k1", 0)), k2=_grid(e.get("k2", 0)))
    raise ConfigurationError("gain file needs one of 'K', 'dd' or 'example3'")


def load_gain(path) -> GainSpec:
    data, _ = read_json(path)
    return gain_from_dict(data)


def network_from_dict(data: dict) -> NetworkGraph:
    try:
        edges = tuple(Edge(e["from"], e["to"], int(e["delay"])) for e in data["edges"])
        overrides = {tuple(o["path"]): int(o["delay"]) for o in data.get("overrides", ())}
        return NetworkGraph(tuple(data["nodes"]), edges, data["controller_node"], data["actuator_node"], overrides)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed network file: {exc}") from exc


def load_network(path) -> NetworkGraph:
    data, _ = read_json(path)
    return network_from_dict(data)


def load_signal(path, *, domain=None, network=None, seed=None):
    data, _ = read_json(path)
    return signal_from_config(data, domain=domain, network=network, seed=seed)


def trajectory_csv(traj: Trajectory) -> str:
    """CSV text with header ``t,sigma,tau,v_1..v_m,x_1..x_n``."""
    m = traj.inputs.shape[1]
    n = traj.states.shape[1]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "sigma", "tau"] + [f"v_{i + 1}" for i in range(m)] + [f"x_{i + 1}" for i in range(n)])
    for k, t in enumerate(traj.times):
        row = [int(t), int(traj.sigma[k]), int(traj.tau[k])]
        row += [fmt(v) for v in traj.inputs[k]] + [fmt(x) for x in traj.states[k]]
        w.writerow(row)
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path) -> None:
    Path(path).write_text(trajectory_csv(traj))
