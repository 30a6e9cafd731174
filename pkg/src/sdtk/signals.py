"""Switching signals and the routing layer that produces them.

A switching signal is a deterministic map ``t -> sigma(t)`` into a delay set.
Random signals are seeded, so every signal here is a pure function of its
configuration and ``t``.  Routing signals derive both the delay set and the
per-step delay from paths through an acyclic relay network.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import networkx as nx
import numpy as np

from ._kernels import arrival_mask
from .errors import ConfigurationError, HorizonError, InvalidDelayError

RANDOM_ALGORITHM = "pcg64"
_BLOCK = 1024


class SwitchingSignal:
    """Base class: subclasses implement :meth:`_value`."""

    kind: str = "abstract"
    domain: tuple[int, ...]

    def emit(self, t: int) -> int:
        if t < 0:
            raise HorizonError(f"signals are defined for t >= 0, got {t}")
        d = self._value(int(t))
        if d not in self.domain:
            raise InvalidDelayError(f"signal emitted {d} outside its domain {self.domain}")
        return d

    def __call__(self, t: int) -> int:
        return self.emit(t)

    def values(self, count: int) -> np.ndarray:
        return np.array([self.emit(t) for t in range(count)], dtype=np.int64)

    def _value(self, t: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "domain": list(self.domain)}


def _domain(values, domain) -> tuple[int, ...]:
    if domain is None:
        dom = sorted(set(int(v) for v in values))
    else:
        dom = sorted(set(int(v) for v in domain))
    if not dom:
        raise ConfigurationError("a signal needs a nonempty delay domain")
    missing = sorted(set(int(v) for v in values) - set(dom))
    if missing:
        raise InvalidDelayError(f"delays {missing} are outside the domain {dom}")
    return tuple(dom)


@dataclass(frozen=True, eq=False)
class PeriodicSignal(SwitchingSignal):
    """Eventually periodic word ``preperiod + period + period + ...``.

    ``kind`` is ``"adversarial"`` when the word is an uncontrollability witness.
    """

    period: tuple[int, ...]
    preperiod: tuple[int, ...] = ()
    domain: tuple[int, ...] | None = None
    kind: str = "periodic"

    def __post_init__(self):
        period = tuple(int(v) for v in self.period)
        pre = tuple(int(v) for v in self.preperiod)
        if not period:
            raise ConfigurationError("the period of a periodic signal must be nonempty")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "domain", _domain(pre + period, self.domain))

    @classmethod
    def from_word(cls, word: str | Sequence[int], domain=None) -> "PeriodicSignal":
        """``"01"`` or ``[0, 1]``; single characters are digits, commas separate longer values."""
        if isinstance(word, str):
            parts = word.split(",") if "," in word else list(word)
            word = [int(p) for p in parts if p.strip()]
        return cls(tuple(word), (), domain)

    def _value(self, t: int) -> int:
        if t < len(self.preperiod):
            return self.preperiod[t]
        return self.period[(t - len(self.preperiod)) % len(self.period)]

    def describe(self):
        return {**super().describe(), "preperiod": list(self.preperiod), "period": list(self.period)}


@lru_cache(maxsize=256)
def _random_block(seed: int, block: int, cdf: tuple[float, ...]) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, block))))
    u = rng.random(_BLOCK)
    idx = np.searchsorted(np.asarray(cdf), u, side="right")
    return np.minimum(idx, len(cdf) - 1)


@dataclass(frozen=True, eq=False)
class RandomSignal(SwitchingSignal):
    """I.i.d. delays drawn from ``domain`` with optional ``weights``.

    Values are generated in blocks of 1024 steps; block ``k`` uses a PCG64
    stream seeded with ``SeedSequence((seed, k))`` and inverse-CDF sampling, so
    ``emit(t)`` depends only on ``(seed, weights, t)``.
    """

    domain: tuple[int, ...]
    seed: int
    weights: tuple[float, ...] | None = None
    kind: str = "random"
    algorithm: str = field(default=RANDOM_ALGORITHM, init=False)

    def __post_init__(self):
        dom = _domain(self.domain, None)
        object.__setattr__(self, "domain", dom)
        if int(self.seed) < 0:
            raise ConfigurationError("seeds must be nonnegative integers")
        object.__setattr__(self, "seed", int(self.seed))
        w = np.ones(len(dom)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (len(dom),) or np.any(w < 0) or w.sum() <= 0:
            raise ConfigurationError("weights must be nonnegative, one per delay, not all zero")
        object.__setattr__(self, "weights", tuple(float(x) for x in w / w.sum()))

    @property
    def _cdf(self) -> tuple[float, ...]:
        return tuple(float(x) for x in np.cumsum(self.weights))

    def _value(self, t: int) -> int:
        idx = _random_block(self.seed, t // _BLOCK, self._cdf)[t % _BLOCK]
        return self.domain[int(idx)]

    def describe(self):
        return {**super().describe(), "seed": self.seed, "weights": list(self.weights), "algorithm": self.algorithm}


@dataclass(frozen=True, eq=False)
class ExplicitSignal(SwitchingSignal):
    """A finite list of delays; querying past its end raises :class:`HorizonError`."""

    sequence: tuple[int, ...]
    domain: tuple[int, ...] | None = None
    kind: str = "explicit"

    def __post_init__(self):
        seq = tuple(int(v) for v in self.sequence)
        object.__setattr__(self, "sequence", seq)
        object.__setattr__(self, "domain", _domain(seq, self.domain if self.domain is not None else seq or None))

    def _value(self, t: int) -> int:
        if t >= len(self.sequence):
            raise HorizonError(f"explicit signal has {len(self.sequence)} values; t={t} requested")
        return self.sequence[t]

    def describe(self):
        return {**super().describe(), "sequence": list(self.sequence)}


# --------------------------------------------------------------------------
# routing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    source: Any
    target: Any
    delay: int


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Acyclic relay network between the controller and the actuator.

    Parallel edges are allowed.  ``overrides`` maps a node path (tuple of node
    ids from controller to actuator) to an explicit delay that replaces the
    edge-sum for every edge-path visiting those nodes.
    """

    nodes: tuple
    edges: tuple[Edge, ...]
    controller_node: Any
    actuator_node: Any
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        known = set(nodes)
        for e in edges:
            if e.source not in known or e.target not in known:
                raise ConfigurationError(f"edge {e} refers to an unknown node")
            if int(e.delay) != e.delay or e.delay < 0:
                raise ConfigurationError(f"edge delays must be nonnegative integers: {e}")
        for end in (self.controller_node, self.actuator_node):
            if end not in known:
                raise ConfigurationError(f"node {end!r} is not in the graph")
        g = nx.MultiDiGraph()
        g.add_nodes_from(nodes)
        g.add_edges_from((e.source, e.target) for e in edges)
        if not nx.is_directed_acyclic_graph(g):
            raise ConfigurationError("the network graph must be acyclic")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(Edge(e.source, e.target, int(e.delay)) for e in edges))
        object.__setattr__(self, "overrides", {tuple(k): int(v) for k, v in dict(self.overrides).items()})

    def paths(self) -> list[tuple[tuple[Edge, ...], int]]:
        """Every controller-to-actuator edge path with its delay, in DFS order."""
        out_edges: dict = {}
        for e in self.edges:
            out_edges.setdefault(e.source, []).append(e)
        found = []

        def walk(node, trail):
            if node == self.actuator_node:
                nodes = (self.controller_node,) + tuple(e.target for e in trail)
                delay = self.overrides.get(nodes, sum(e.delay for e in trail))
                found.append((tuple(trail), delay))
                return
            for e in out_edges.get(node, ()):
                trail.append(e)
                walk(e.target, trail)
                trail.pop()

        walk(self.controller_node, [])
        return found


def path_delays(graph: NetworkGraph) -> tuple[int, ...]:
    """Sorted distinct delays over all controller-to-actuator paths."""
    paths = graph.paths()
    if not paths:
        raise ConfigurationError("no path from the controller node to the actuator node")
    return tuple(sorted({d for _, d in paths}))


ROUTING_POLICIES = ("round_robin", "uniform", "trace")


@dataclass(frozen=True, eq=False)
class RoutingSignal(SwitchingSignal):
    """Delay of the path chosen at each step by a routing policy.

    ``round_robin`` cycles through the paths in enumeration order, ``uniform``
    picks a path i.i.d. (seeded), ``trace`` replays a list of path indices.
    """

    graph: NetworkGraph
    policy: str = "round_robin"
    seed: int = 0
    trace: tuple[int, ...] = ()
    kind: str = "routing"
    domain: tuple[int, ...] = field(init=False)
    path_delay_list: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.policy not in ROUTING_POLICIES:
            raise ConfigurationError(f"unknown routing policy {self.policy!r}; choose from {ROUTING_POLICIES}")
        object.__setattr__(self, "domain", path_delays(self.graph))
        object.__setattr__(self, "path_delay_list", tuple(d for _, d in self.graph.paths()))
        trace = tuple(int(i) for i in self.trace)
        if self.policy == "trace":
            if not trace:
                raise ConfigurationError("the trace policy needs a nonempty list of path indices")
            if min(trace) < 0 or max(trace) >= len(self.path_delay_list):
                raise ConfigurationError(f"trace indices must be in [0, {len(self.path_delay_list)})")
        object.__setattr__(self, "trace", trace)

    def _value(self, t: int) -> int:
        paths = self.path_delay_list
        if self.policy == "round_robin":
            return paths[t % len(paths)]
        if self.policy == "uniform":
            cdf = tuple(float(x) for x in np.arange(1, len(paths) + 1) / len(paths))
            return paths[int(_random_block(int(self.seed), t // _BLOCK, cdf)[t % _BLOCK])]
        if t >= len(self.trace):
            raise HorizonError(f"routing trace has {len(self.trace)} entries; t={t} requested")
        return paths[self.trace[t]]

    def describe(self):
        return {**super().describe(), "policy": self.policy, "seed": int(self.seed)}


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def actuation_times(signal, T: int) -> np.ndarray:
    """``tau(0..T)``: 1 where at least one packet sent at ``t' <= t`` arrives."""
    if T < 0:
        raise HorizonError("horizon must be nonnegative")
    emit = signal.emit if isinstance(signal, SwitchingSignal) else signal
    sigma = np.array([emit(t) for t in range(T + 1)], dtype=np.int64)
    return arrival_mask(np.arange(T + 1) + sigma, T)


def adversarial_signal(preperiod, period, domain=None) -> PeriodicSignal:
    """Periodic signal built from a controllability witness."""
    return PeriodicSignal(tuple(period), tuple(preperiod), domain, kind="adversarial")


def example1_signal() -> PeriodicSignal:
    return PeriodicSignal((0, 1), (), (0, 1))


@dataclass(frozen=True, eq=False)
class _ModularSignal(SwitchingSignal):
    top: int
    modulus: int
    start: int
    kind: str = "periodic"
    domain: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(range(self.top + 1)))

    def _value(self, t):
        return 0 if t < self.start else self.top - (t % self.modulus)


def example2_signal(modulus: int = 121, top: int = 121) -> SwitchingSignal:
    """``0`` for ``t <= 2``, then ``top - (t mod modulus)``; domain ``{0..top}``."""
    if modulus < 1 or top - (modulus - 1) < 0:
        raise ConfigurationError("need modulus >= 1 and top >= modulus - 1")
    return _ModularSignal(top, modulus, 3)


def signal_from_config(cfg: dict, *, domain=None, network: NetworkGraph | None = None, seed: int | None = None):
    """Build a signal from a parsed signal-file dictionary."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigurationError("signal config must be an object with a 'kind' field")
    kind = cfg["kind"]
    dom = cfg.get("domain", domain)
    if kind in ("periodic", "adversarial"):
        if "word" in cfg:
            word = cfg["word"]
            period = PeriodicSignal.from_word(word).period
        else:
            period = tuple(cfg.get("period", ()))
        return PeriodicSignal(period, tuple(cfg.get("preperiod", ())), dom, kind=kind)
    if kind == "random":
        s = cfg.get("seed", seed)
        if s is None:
            raise ConfigurationError("random signals need a seed (in the file or via --seed)")
        if dom is None:
            raise ConfigurationError("random signals need a delay domain")
        return RandomSignal(tuple(dom), int(s), tuple(cfg["weights"]) if "weights" in cfg else None)
    if kind == "explicit":
        return ExplicitSignal(tuple(cfg.get("sequence", cfg.get("values", ()))), dom)
    if kind == "routing":
        if network is None:
            raise ConfigurationError("routing signals need a network file")
        s = cfg.get("seed", seed if seed is not None else 0)
        return RoutingSignal(network, cfg.get("policy", "round_robin"), int(s), tuple(cfg.get("trace", ())))
    if kind == "example2":
        return example2_signal(int(cfg.get("modulus", 121)), int(cfg.get("top", 121)))
    raise ConfigurationError(f"unknown signal kind {kind!r}")
