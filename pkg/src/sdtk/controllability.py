"""Controllability of single-input plants under switching delays.

With unbounded look-ahead the plant can be steered anywhere iff every delay
signal eventually makes the controllability matrix ``C_t`` full rank.  This
module builds ``C_t``, decides the question exactly for regular ``A``
(subspace search over delay prefixes), splits singular ``A`` into its
nilpotent and regular parts, classifies the nilpotent part in closed form and
offers a cheap sufficient test for block-cyclic patterns.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import linalg
from .errors import BudgetExceededError, ConfigurationError, SingularMatrixError, UnsupportedInstanceError
from .linalg import Subspace
from .model import SwitchedDelayPlant
from .signals import PeriodicSignal, SwitchingSignal

DEFAULT_FLOAT_RTOL = 1e-9


class ControllabilityOutcome(str, enum.Enum):
    CONTROLLABLE = "Controllable"
    UNCONTROLLABLE = "Uncontrollable"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


CONTROLLABLE = ControllabilityOutcome.CONTROLLABLE
UNCONTROLLABLE = ControllabilityOutcome.UNCONTROLLABLE
INCONCLUSIVE = ControllabilityOutcome.INCONCLUSIVE


@dataclass(frozen=True)
class Witness:
    """Eventually periodic delay word ``preperiod + period + period + ...``."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    verified: bool = True

    def __post_init__(self):
        if not self.period:
            raise ConfigurationError("a witness needs a nonempty period")

    def signal(self, domain=None) -> PeriodicSignal:
        return PeriodicSignal(self.period, self.preperiod, domain, kind="adversarial")

    def value(self, t: int) -> int:
        if t < len(self.preperiod):
            return self.preperiod[t]
        return self.period[(t - len(self.preperiod)) % len(self.period)]

    def to_dict(self) -> dict:
        return {"preperiod": list(self.preperiod), "period": list(self.period)}

    @classmethod
    def normalized(cls, preperiod: Sequence[int], period: Sequence[int], verified: bool = True) -> "Witness":
        """Fold the preperiod into the period where possible and use the primitive period."""
        pre = list(preperiod)
        per = list(period)
        while pre and pre[-1] == per[-1]:
            pre.pop()
            per = [per[-1]] + per[:-1]
        p = len(per)
        for q in range(1, p + 1):
            if p % q == 0 and per == per[:q] * (p // q):
                per = per[:q]
                break
        return cls(tuple(pre), tuple(per), verified)


@dataclass(frozen=True)
class ControllabilityVerdict:
    outcome: ControllabilityOutcome
    witness: Witness | None = None
    steps_bound: int | None = None
    min_lookahead: int | None = None
    reason: str = ""

    @property
    def controllable(self) -> bool:
        return self.outcome == CONTROLLABLE

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "witness": self.witness.to_dict() if self.witness else None,
            "bound_Nstar": self.steps_bound,
            "min_lookahead": self.min_lookahead,
            "reason": self.reason,
        }


@dataclass(frozen=True, eq=False)
class ControllabilitySnapshot:
    """Columns of ``C_t`` (ordered by send time) and a basis of their span."""

    t: int
    columns: np.ndarray  # (n, k)
    send_times: tuple[int, ...]
    span_basis: np.ndarray  # (n, rank), columns
    rank: int


def n_star(n: int, num_delays: int) -> int:
    """Search depth ``C(n + 2|D|, 2|D|)`` that makes the subspace search exact."""
    return math.comb(n + 2 * num_delays, 2 * num_delays)


def _single_input(plant: SwitchedDelayPlant) -> np.ndarray:
    if plant.m != 1:
        raise UnsupportedInstanceError("controllability analysis covers single-input plants (m = 1) only")
    return plant.B[:, 0].copy()


def _delays_of(signal, count: int) -> list[int]:
    if isinstance(signal, SwitchingSignal):
        return [signal.emit(t) for t in range(count)]
    if callable(signal):
        return [int(signal(t)) for t in range(count)]
    seq = [int(v) for v in signal]
    if len(seq) < count:
        from .errors import HorizonError

        raise HorizonError(f"signal has {len(seq)} values, {count} needed")
    return seq[:count]


def _powers(A, b, count: int) -> list[np.ndarray]:
    out = [b]
    for _ in range(count - 1):
        out.append(A @ out[-1])
    return out


def controllability_matrix(plant: SwitchedDelayPlant, signal, t: int, rtol: float | None = None) -> ControllabilitySnapshot:
    """``C_t``: columns ``A^(t - t' - sigma(t')) b`` for every packet delivered by ``t``.

    ``x(t+1) = A^(t+1) x(0) + C_t v`` with ``v`` the delivered packets in send
    order, so ``rank C_t = n`` means every target is reachable at ``t + 1``.
    """
    if t < 0:
        raise ConfigurationError("t must be nonnegative")
    b = _single_input(plant)
    sigma = _delays_of(signal, t + 1)
    for d in sigma:
        plant.check_delay(d)
    pw = _powers(plant.A, b, t + 1)
    cols, times = [], []
    for tp, d in enumerate(sigma):
        e = t - tp - d
        if e >= 0:
            cols.append(pw[e])
            times.append(tp)
    n = plant.n
    C = np.stack(cols, axis=1) if cols else linalg.zeros((n, 0), plant.exact)
    if C.shape[1] == 0:
        basis, r = linalg.zeros((n, 0), plant.exact), 0
    else:
        r = linalg.rank(C, rtol)
        basis = linalg.column_space(C, rtol)
    return ControllabilitySnapshot(t, C, tuple(times), basis, r)


def rank_history(plant: SwitchedDelayPlant, signal, T: int, rtol: float | None = None) -> np.ndarray:
    """``rank C_t`` for ``t = 0..T`` (incremental in exact mode)."""
    b = _single_input(plant)
    dm = plant.d_max
    sigma = _delays_of(signal, T + 1)
    for d in sigma:
        plant.check_delay(d)
    arrivals: dict[int, int] = {}
    for tp, d in enumerate(sigma):
        arrivals[tp + d] = arrivals.get(tp + d, 0) + 1
    out = np.zeros(T + 1, dtype=np.int64)
    if plant.exact:
        # span C_{t+1} = A span C_t + (b if something arrives at t+1)
        S = Subspace.span([], plant.n, True)
        for t in range(T + 1):
            if t:
                S = S.image(plant.A)
            if arrivals.get(t):
                S = S.extended(b)
            out[t] = S.dim
        return out
    pw = _powers(linalg.to_float(plant.A), linalg.to_float(b), T + dm + 2)
    for t in range(T + 1):
        cols = [pw[t - a] for a in sorted(arrivals) if a <= t]
        if cols:
            out[t] = linalg.rank(np.stack(cols, axis=1), rtol)
    return out


# --------------------------------------------------------------------------
# regular case: subspace search
# --------------------------------------------------------------------------


@dataclass
class ExploreGraph:
    """Subspace graph visited by :func:`algorithm1`.

    Node keys are canonical subspace keys.  ``edges[key][d]`` is the child key
    or ``None`` when choosing delay ``d`` fills the space.
    """

    root: object
    nodes: dict = field(default_factory=dict)  # key -> Subspace
    edges: dict = field(default_factory=dict)  # key -> {d: key | None}
    levels: list = field(default_factory=list)  # level t -> list of keys

    def dims(self) -> dict:
        return {k: s.dim for k, s in self.nodes.items()}


@dataclass(frozen=True)
class Algorithm1Result:
    verdict: ControllabilityVerdict
    graph: ExploreGraph
    levels_run: int


class _SubspaceSearch:
    """Shared transition function of the moving-frame subspace search.

    A node is ``R = A^t S`` where ``S`` is the span of the normalized columns
    ``A^(-(t'+sigma(t'))) b`` committed so far.  Choosing delay ``d`` for the
    packet of step ``t`` keeps ``R`` if ``A^(-d) b`` lies in it, else extends it
    (the branch dies if that fills the space); the next node is ``A`` times the
    result.  The map does not depend on ``t``, so nodes are shared across levels.
    """

    def __init__(self, A, b, delays, exact: bool, rtol: float):
        self.A = A
        self.delays = tuple(sorted(delays))
        self.exact = exact
        self.rtol = rtol
        self.n = A.shape[0]
        self.back = {}
        v = b
        for d in range(max(self.delays) + 1):
            self.back[d] = v
            v = linalg.solve(A, v)
        self.graph = None

    def root(self) -> Subspace:
        return Subspace.span([self.back[0]], self.n, self.exact, self.rtol).image(self.A)

    def successors(self, R: Subspace) -> dict:
        g = self.graph
        if R.key in g.edges:
            return g.edges[R.key]
        out = {}
        for d in self.delays:
            ext = R.extended(self.back[d])
            if ext.is_full:
                out[d] = None
                continue
            child = ext.image(self.A)
            key = child.key
            if key not in g.nodes:
                g.nodes[key] = child
            out[d] = key
        g.edges[R.key] = out
        return out


def algorithm1(
    plant: SwitchedDelayPlant,
    *,
    rtol: float | None = None,
    max_nodes: int = 200_000,
    lasso_levels: int | None = None,
) -> Algorithm1Result:
    """Decide controllability of a regular single-input plant with unbounded look-ahead.

    Runs the prefix search for ``t = 1..N*`` with ``N* = C(n + 2|D|, 2|D|)``.
    The plant is controllable iff no prefix survives.  Otherwise a delay word
    whose subspace never fills is extracted as an eventually periodic witness
    (a cycle in the explored subspace graph).

    Raises
    ------
    SingularMatrixError
        When ``A`` is singular; use :func:`fitting_split` or :func:`decide`.
    """
    b = _single_input(plant)
    if not linalg.is_invertible(plant.A):
        raise SingularMatrixError("algorithm1 needs a regular A; split off the nilpotent part first")
    tol = rtol if rtol is not None else DEFAULT_FLOAT_RTOL
    search = _SubspaceSearch(plant.A, b, plant.delays, plant.exact, tol)
    root = search.root()
    graph = ExploreGraph(root.key)
    graph.nodes[root.key] = root
    search.graph = graph
    bound = n_star(plant.n, len(plant.delays))
    frontier = [root.key]
    graph.levels.append(list(frontier))
    t = 0
    while frontier and t < bound:
        t += 1
        nxt: dict = {}
        for key in frontier:
            for d, child in search.successors(graph.nodes[key]).items():
                if child is not None:
                    nxt.setdefault(child, None)
        frontier = list(nxt)
        graph.levels.append(frontier)
        if len(graph.nodes) > max_nodes:
            raise BudgetExceededError(f"subspace search exceeded {max_nodes} nodes")
    if not frontier:
        verdict = ControllabilityVerdict(CONTROLLABLE, None, bound, reason=f"every delay prefix fills R^n by t = {t}")
        return Algorithm1Result(verdict, graph, t)
    witness = _lasso_witness(search, graph, plant.delays, max_nodes, lasso_levels or 10 * bound)
    verdict = ControllabilityVerdict(UNCONTROLLABLE, witness, bound, reason=f"a delay prefix survives t = {bound}")
    return Algorithm1Result(verdict, graph, t)


def _lasso_witness(search: _SubspaceSearch, graph: ExploreGraph, delays, max_nodes: int, max_depth: int) -> Witness:
    """First cycle (DFS, delays in increasing order) of live nodes reachable from the root."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict = {}
    path_nodes: list = []
    path_labels: list = []
    stack = [(graph.root, iter(sorted(search.successors(graph.nodes[graph.root]).items())))]
    color[graph.root] = GRAY
    path_nodes.append(graph.root)
    while stack:
        key, it = stack[-1]
        advanced = False
        for d, child in it:
            if child is None:
                continue
            c = color.get(child, WHITE)
            if c == GRAY:
                start = path_nodes.index(child)
                word_pre = path_labels[:start]
                word_per = path_labels[start:] + [d]
                return _signal_witness(word_pre, word_per, delays)
            if c == WHITE and len(path_nodes) < max_depth and len(graph.nodes) <= max_nodes:
                color[child] = GRAY
                path_nodes.append(child)
                path_labels.append(d)
                stack.append((child, iter(sorted(search.successors(graph.nodes[child]).items()))))
                advanced = True
                break
        if not advanced:
            color[key] = BLACK
            stack.pop()
            path_nodes.pop()
            if path_labels:
                path_labels.pop()
    # no cycle within the caps: fall back to the longest surviving prefix
    prefix = _surviving_prefix(search, graph)
    return Witness(tuple(prefix[:-1]), (prefix[-1],), verified=False)


def _surviving_prefix(search, graph) -> list[int]:
    word = []
    key = graph.root
    for level in graph.levels[1:]:
        alive = set(level)
        for d, child in sorted(search.successors(graph.nodes[key]).items()):
            if child is not None and child in alive:
                word.append(d)
                key = child
                break
        else:
            break
    return word or [min(search.delays)]


def _signal_witness(word_pre, word_per, delays) -> Witness:
    """Turn search labels ``d(1), d(2), ...`` into a delay signal starting at ``t = 0``.

    The search starts from ``span(b)``, i.e. a packet delivered at time 0.  With
    ``0 in D`` that packet is ``sigma(0) = 0``; otherwise the labels themselves,
    shifted one step earlier, form a witness.
    """
    pre = ([0] if 0 in delays else []) + list(word_pre)
    return Witness.normalized(pre, word_per)


# --------------------------------------------------------------------------
# singular A: Fitting split and the nilpotent classification
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FittingSplit:
    """``T A T^-1 = diag(J_{0,k}, A')`` and ``T b = (b0, b')``.

    ``multiple_zero_blocks`` marks a kernel of dimension > 1, which already
    makes the plant uncontrollable; the other fields are then ``None``.
    """

    nilpotent: tuple | None  # (J, b0, k)
    regular: tuple | None  # (A', b')
    T: np.ndarray | None
    multiple_zero_blocks: bool = False

    @property
    def k(self) -> int:
        return 0 if self.nilpotent is None else self.nilpotent[2]


def fitting_split(plant: SwitchedDelayPlant, rtol: float | None = None) -> FittingSplit:
    """Split off the generalized kernel of ``A`` (at most one Jordan block at zero)."""
    b = _single_input(plant)
    A = plant.A
    n = plant.n
    exact = plant.exact
    An = linalg.matrix_power(A, n)
    K = linalg.nullspace(An, rtol)
    k = K.shape[1]
    if k == 0:
        return FittingSplit(None, (A.copy(), b.copy()), linalg.eye(n, exact))
    if linalg.nullspace(A, rtol).shape[1] > 1:
        return FittingSplit(None, None, None, True)
    Ak1 = linalg.matrix_power(A, k - 1)
    if exact:
        v = next(K[:, j] for j in range(k) if any(x != 0 for x in Ak1 @ K[:, j]))
    else:
        j = int(np.argmax(np.linalg.norm(Ak1 @ K, axis=0)))
        v = K[:, j]
    chain = [v]
    for _ in range(k - 1):
        chain.append(A @ chain[-1])
    chain = chain[::-1]  # A^{k-1} v, ..., A v, v
    R = linalg.column_space(An, rtol)
    P = np.concatenate([np.stack(chain, axis=1), R], axis=1)
    if P.shape[1] != n:
        raise SingularMatrixError("Fitting decomposition failed to produce a basis")
    Tm = linalg.solve(P, linalg.eye(n, exact))
    At = Tm @ A @ P
    bt = Tm @ b
    J = At[:k, :k].copy()
    if not exact:
        J = np.round(J, 12) + 0.0
    nil = (J, bt[:k].copy(), k)
    reg = (At[k:, k:].copy(), bt[k:].copy()) if k < n else None
    return FittingSplit(nil, reg, Tm)


def _ones_run_free(pattern: Sequence[int], k: int) -> bool:
    """No run of ``k`` ones in the cyclic word ``pattern``."""
    doubled = list(pattern) * (k + 1)
    run = 0
    for x in doubled:
        run = run + 1 if x else 0
        if run >= k:
            return False
    return True


def _residue_lift(tau: Sequence[int], delays: Sequence[int]) -> tuple[int, ...] | None:
    """Periodic ``sigma`` with ``tau[(r + sigma(r)) mod P] = 1`` for each residue ``r``."""
    P = len(tau)
    out = []
    for r in range(P):
        d = next((d for d in sorted(delays) if tau[(r + d) % P]), None)
        if d is None:
            return None
        out.append(d)
    return tuple(out)


def _greedy_witness(k: int, delays: Sequence[int], max_steps: int = 100_000) -> Witness | None:
    """Greedy delay choice that never creates ``k`` consecutive arrivals.

    Sends with the smallest delay unless that closes a run of ``k`` ones among
    the arrivals already fixed, in which case the second smallest is used.  The
    state (last ``k - 1`` resolved slots plus committed future slots) is finite,
    so the run is eventually periodic.
    """
    d1, d2 = sorted(delays)[:2]
    dm = max(d1, d2)
    lo = k - 1
    window = [0] * (lo + dm + 1)  # slots t-lo .. t+dm
    seen: dict = {}
    word: list[int] = []
    for t in range(max_steps):
        state = tuple(window)
        if state in seen:
            s = seen[state]
            return Witness.normalized(word[:s], word[s:])
        seen[state] = t
        choice = None
        for d in (d1, d2):
            trial = list(window)
            trial[lo + d] = 1
            if _ones_run_free_linear(trial, k):
                choice = d
                window = trial
                break
        if choice is None:
            return None
        word.append(choice)
        window = window[1:] + [0]
    return None


def _ones_run_free_linear(bits: Sequence[int], k: int) -> bool:
    run = 0
    for x in bits:
        run = run + 1 if x else 0
        if run >= k:
            return False
    return True


def classify_nilpotent(k: int, delays: Sequence[int], b0=None) -> ControllabilityVerdict:
    """Closed-form verdict for ``(J_{0,k}, b0)`` under delay set ``D``.

    Uncontrollable unless ``|D| = 1``, ``k = 1``, or ``k = 2`` with exactly two
    delays of equal parity (then the minimal look-ahead is ``d_max``).
    Uncontrollable verdicts carry a witness whose actuation times never contain
    ``k`` consecutive ones.
    """
    D = tuple(sorted(set(int(d) for d in delays)))
    if k < 1:
        raise ConfigurationError("nilpotent block size must be positive")
    if not D or D[0] < 0:
        raise ConfigurationError("delay set must be nonempty and nonnegative")
    if b0 is not None:
        b0 = np.asarray(b0, dtype=object).reshape(-1)
        if len(b0) != k or b0[-1] == 0:
            raise ConfigurationError("(J_{0,k}, b0) must be a controllable pair (last entry of b0 nonzero)")
    if len(D) == 1:
        return ControllabilityVerdict(CONTROLLABLE, None, None, 0, "constant delay")
    if k == 1:
        return ControllabilityVerdict(CONTROLLABLE, None, None, 0, "every arrival fills a 1-dimensional block")
    if k == 2:
        evens = [d for d in D if d % 2 == 0]
        odds = [d for d in D if d % 2 == 1]
        if evens and odds:
            w = Witness.normalized((), (evens[0], odds[0]))
            return ControllabilityVerdict(UNCONTROLLABLE, w, reason="mixed parity: all arrivals on even times")
        if len(D) == 2:
            return ControllabilityVerdict(CONTROLLABLE, None, None, D[-1], "two delays of equal parity")
        base = D[0]
        e2, e3 = D[1] - base, D[2] - base
        if e3 <= 2 * e2:
            tau = [0, 0, 1] + [0, 1] * (e2 // 2 - 1)
        else:
            tau = [0, 0, 1] + [0, 1] * ((e3 - e2 - 2) // 2)
        lifted = _residue_lift(tau, [d - base for d in D])
        if lifted is None or not _ones_run_free(tau, 2):
            raise RuntimeError(f"no witness lift for D={D}")  # pragma: no cover
        w = Witness.normalized((), tuple(d + base for d in lifted))
        return ControllabilityVerdict(UNCONTROLLABLE, w, reason="three or more delays of equal parity")
    w = _greedy_witness(k, D)
    if w is None:
        raise RuntimeError(f"greedy witness construction failed for k={k}, D={D}")  # pragma: no cover
    return ControllabilityVerdict(UNCONTROLLABLE, w, reason=f"greedy signal avoids {k} consecutive arrivals")


def nilpotent_oracle(k: int, delays: Sequence[int], horizon: int | None = None, *, max_states: int = 1_000_000) -> ControllabilityOutcome:
    """Brute-force verdict for a nilpotent block of size ``k``.

    States are (committed arrivals over the next ``d_max + 1`` slots, current
    run of consecutive arrivals capped at ``k``).  A run of ``k`` is losing for
    the adversary.  Without ``horizon`` the plant is uncontrollable iff a cycle
    of non-losing states is reachable; with ``horizon`` the question is whether
    some signal avoids a run of ``k`` for ``horizon`` steps.
    """
    D = tuple(sorted(set(int(d) for d in delays)))
    start = (0, 0)

    def succ(state):
        mask, run = state
        for d in D:
            m2 = mask | (1 << d)
            hit = m2 & 1
            r2 = min(run + 1, k) if hit else 0
            if r2 >= k:
                continue
            yield (m2 >> 1, r2)

    if horizon is not None:
        level = {start}
        for _ in range(horizon):
            level = {s for st in level for s in succ(st)}
            if not level:
                return CONTROLLABLE
            if len(level) > max_states:
                raise BudgetExceededError("nilpotent oracle exceeded its state budget")
        return UNCONTROLLABLE

    # reachable subgraph, then repeatedly strip states without successors
    reach = {start}
    todo = [start]
    adj = {}
    while todo:
        s = todo.pop()
        adj[s] = list(succ(s))
        for c in adj[s]:
            if c not in reach:
                reach.add(c)
                todo.append(c)
                if len(reach) > max_states:
                    raise BudgetExceededError("nilpotent oracle exceeded its state budget")
    alive = set(reach)
    changed = True
    while changed:
        changed = False
        for s in list(alive):
            if not any(c in alive for c in adj[s]):
                alive.discard(s)
                changed = True
    return UNCONTROLLABLE if start in alive else CONTROLLABLE


# --------------------------------------------------------------------------
# block-cyclic sufficient condition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCyclicStructure:
    """Coordinate blocks on which ``A`` acts as a cyclic shift ``block k -> block k+1``.

    ``boundaries`` is ``(0, n_1, ..., n_p = n)`` for contiguous blocks; detected
    structures may use arbitrary index sets, given in ``blocks``.
    """

    period: int
    blocks: tuple[tuple[int, ...], ...]
    zero_block_indices: tuple[int, ...] = ()
    boundaries: tuple[int, ...] | None = None

    @classmethod
    def from_boundaries(cls, boundaries: Sequence[int]) -> "BlockCyclicStructure":
        bd = tuple(int(x) for x in boundaries)
        if len(bd) < 2 or bd[0] != 0 or any(b2 <= b1 for b1, b2 in zip(bd, bd[1:])):
            raise ConfigurationError("boundaries must be 0 = n_0 < n_1 < ... < n_p")
        blocks = tuple(tuple(range(a, c)) for a, c in zip(bd, bd[1:]))
        return cls(len(blocks), blocks, (), bd)

    def block_of(self) -> dict[int, int]:
        return {i: k for k, blk in enumerate(self.blocks) for i in blk}


@dataclass(frozen=True)
class BlockCyclicResult:
    outcome: ControllabilityOutcome
    structure: BlockCyclicStructure | None
    witness: Witness | None = None
    reason: str = ""


def _nonzero(x) -> bool:
    return x != 0


def _respects(A, structure: BlockCyclicStructure) -> bool:
    blk = structure.block_of()
    p = structure.period
    n = A.shape[0]
    if sorted(blk) != list(range(n)):
        return False
    for i in range(n):
        for j in range(n):
            if _nonzero(A[i, j]) and blk[i] != (blk[j] + 1) % p:
                return False
    return True


def detect_block_cyclic(A) -> list[BlockCyclicStructure]:
    """Candidate cyclic block structures visible in the support of ``A``.

    Assigns potentials ``phi(i) = phi(j) + 1`` along support edges ``j -> i``
    over the weakly connected support graph; the period must divide the gcd of
    all potential discrepancies.  Returns structures for every divisor ``p > 1``
    (largest first) whose residue classes are all nonempty.
    """
    n = A.shape[0]
    adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    edges = []
    for i in range(n):
        for j in range(n):
            if _nonzero(A[i, j]):
                edges.append((j, i))
                adj[j].append((i, 1))
                adj[i].append((j, -1))
    phi = {0: 0}
    todo = [0]
    while todo:
        u = todo.pop()
        for v, w in adj[u]:
            if v not in phi:
                phi[v] = phi[u] + w
                todo.append(v)
    if len(phi) != n:
        return []
    g = reduce(math.gcd, (abs(phi[i] - phi[j] - 1) for j, i in edges), 0)
    if g <= 1:
        return []
    out = []
    for p in sorted((q for q in range(2, g + 1) if g % q == 0), reverse=True):
        classes = [tuple(i for i in range(n) if phi[i] % p == r) for r in range(p)]
        if all(classes):
            out.append(BlockCyclicStructure(p, tuple(classes)))
    return out


def block_cyclic_test(plant: SwitchedDelayPlant, structure: BlockCyclicStructure | None = None) -> BlockCyclicResult:
    """Sufficient uncontrollability test for block-cyclic ``A``.

    If ``b`` vanishes on the blocks ``Z`` and every residue ``x`` mod ``p`` can be
    written ``z - d`` with ``z`` in ``Z`` and ``d`` in ``D``, the signal with
    ``z - sigma(t) = t (mod p)`` keeps a zero block in every column of ``C_t``.
    """
    b = _single_input(plant)
    A = plant.A
    if structure is not None:
        if not _respects(A, structure):
            raise ConfigurationError("A does not follow the supplied cyclic block pattern")
        candidates = [structure]
    else:
        candidates = detect_block_cyclic(A)
    if not candidates:
        return BlockCyclicResult(INCONCLUSIVE, None, None, "no cyclic block pattern in the support of A")
    last = None
    for st in candidates:
        p = st.period
        Z = tuple(kk for kk, blk in enumerate(st.blocks) if all(not _nonzero(b[i]) for i in blk))
        st = BlockCyclicStructure(p, st.blocks, Z, st.boundaries)
        last = st
        if not Z:
            continue
        covered = {(z - d) % p for z in Z for d in plant.delays}
        if len(covered) < p:
            continue
        word = []
        for t in range(p):
            word.append(min(d for d in plant.delays if any((z - d - t) % p == 0 for z in Z)))
        return BlockCyclicResult(UNCONTROLLABLE, st, Witness.normalized((), word), f"cyclic blocks of order {p}")
    return BlockCyclicResult(INCONCLUSIVE, last, None, "zero blocks of b do not cover every residue")


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------


def decide(plant: SwitchedDelayPlant, *, rtol: float | None = None) -> ControllabilityVerdict:
    """Controllability with unbounded look-ahead for any single-input plant."""
    b = _single_input(plant)
    bound = n_star(plant.n, len(plant.delays))
    const = Witness((), (plant.delays[0],))
    if not linalg.is_controllable_pair(plant.A, plant.B, rtol):
        return ControllabilityVerdict(UNCONTROLLABLE, const, bound, reason="(A, b) fails the Kalman test")
    split = fitting_split(plant, rtol)
    if split.multiple_zero_blocks:
        return ControllabilityVerdict(UNCONTROLLABLE, const, bound, reason="more than one Jordan block at zero")
    nil_verdict = None
    if split.nilpotent is not None:
        _, b0, k = split.nilpotent
        nil_verdict = classify_nilpotent(k, plant.delays, b0)
        if not nil_verdict.controllable:
            return ControllabilityVerdict(
                UNCONTROLLABLE, nil_verdict.witness, bound, reason="nilpotent part: " + nil_verdict.reason
            )
    if split.regular is not None:
        Ar, br = split.regular
        sub = SwitchedDelayPlant(Ar, br.reshape(-1, 1), plant.delays, 0, plant.arithmetic, strict=False)
        res = algorithm1(sub, rtol=rtol).verdict
        if not res.controllable:
            return ControllabilityVerdict(UNCONTROLLABLE, res.witness, bound, reason="regular part: " + res.reason)
    min_la = nil_verdict.min_lookahead if (nil_verdict is not None and split.regular is None) else None
    return ControllabilityVerdict(CONTROLLABLE, None, bound, min_la, "every delay signal reaches full rank")


def witness_keeps_rank_deficient(plant: SwitchedDelayPlant, witness: Witness, horizon: int, rtol: float | None = None) -> bool:
    """Replay a witness and check ``rank C_t < n`` for ``t = 0..horizon``."""
    ranks = rank_history(plant, witness.value, horizon, rtol)
    return bool(np.all(ranks < plant.n))
