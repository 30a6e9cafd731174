"""Plants with switching input delays and their switched-linear representations.

A plant ``x(t+1) = A x(t) + B u(t)`` receives, at each step, the sum of every
control packet ``v(t')`` whose route delay satisfies ``t' + sigma(t') = t``,
and zero when nothing arrives.  This module builds the extended system that
tracks in-flight packets, the closed loops of delay-dependent and
delay-independent linear controllers, and simulates the exact trajectory.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from . import linalg
from ._kernels import arrival_mask
from .errors import ConfigurationError, HorizonError, InvalidDelayError


@dataclass(frozen=True, eq=False)
class SwitchedDelayPlant:
    """Problem instance: plant matrices, delay set and controller look-ahead.

    ``A`` and ``B`` may be nested lists; they are converted to exact
    ``Fraction`` arrays when ``arithmetic="rational"`` (the default whenever all
    entries are ints, Fractions or ``"p/q"`` strings) and to float64 otherwise.
    A 1-d ``B`` is read as a single column.  With ``strict=True`` the pair
    ``(A, B)`` must pass the Kalman rank test.
    """

    A: np.ndarray
    B: np.ndarray
    delays: tuple[int, ...]
    lookahead: int = 0
    arithmetic: str | None = None
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        arith = self.arithmetic or linalg.detect_arithmetic(self.A, self.B)
        A = linalg.as_matrix(self.A, arith)
        B_raw = np.asarray(self.B, dtype=object)
        if B_raw.ndim == 1:
            B_raw = B_raw.reshape(-1, 1)
        B = linalg.as_matrix(B_raw, arith)
        if A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ConfigurationError(f"A must be square and nonempty, got {A.shape}")
        if B.shape[0] != A.shape[0] or B.shape[1] == 0:
            raise ConfigurationError(f"B must have {A.shape[0]} rows, got {B.shape}")
        try:
            delays = tuple(int(d) for d in self.delays)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"delays must be integers: {self.delays!r}") from exc
        if not delays:
            raise ConfigurationError("the delay set must be nonempty")
        if len(set(delays)) != len(delays):
            raise ConfigurationError(f"duplicate delays in {delays}")
        if min(delays) < 0:
            raise ConfigurationError("delays must be nonnegative")
        if int(self.lookahead) < 0:
            raise ConfigurationError("look-ahead must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "delays", tuple(sorted(delays)))
        object.__setattr__(self, "lookahead", int(self.lookahead))
        object.__setattr__(self, "arithmetic", arith)
        if self.strict and not linalg.is_controllable_pair(A, B):
            raise ConfigurationError("the pair (A, B) fails the Kalman rank test")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def d_max(self) -> int:
        return self.delays[-1]

    @property
    def exact(self) -> bool:
        return self.arithmetic == linalg.RATIONAL

    def with_lookahead(self, lookahead: int) -> "SwitchedDelayPlant":
        return SwitchedDelayPlant(self.A, self.B, self.delays, lookahead, self.arithmetic, self.strict)

    def vector(self, data) -> np.ndarray:
        return linalg.as_matrix(np.asarray(data, dtype=object).reshape(-1), self.arithmetic, ndim=1)

    def check_delay(self, d) -> int:
        if d not in self.delays:
            raise InvalidDelayError(f"delay {d!r} is not in D={self.delays}")
        return int(d)


# --------------------------------------------------------------------------
# state containers
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """Plant state plus the inputs already scheduled for the next ``d_max`` steps.

    ``pending[s-1]`` is the sum of packets due at time ``t + s - 1``, i.e. the
    input the plant will receive ``s - 1`` steps from now (before any new packet
    with delay ``s - 1`` is added).
    """

    x: np.ndarray
    pending: np.ndarray  # (d_max, m)

    @classmethod
    def zero(cls, plant: SwitchedDelayPlant, x0=None) -> "ExtendedState":
        x = linalg.zeros(plant.n, plant.exact) if x0 is None else plant.vector(x0)
        return cls(x, linalg.zeros((plant.d_max, plant.m), plant.exact))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.pending.reshape(-1)])

    @classmethod
    def from_vector(cls, vec, n: int, m: int, d_max: int) -> "ExtendedState":
        vec = np.asarray(vec) if not linalg.is_exact(vec) else vec
        return cls(vec[:n].copy(), vec[n:].reshape(d_max, m).copy())


@dataclass(frozen=True, eq=False)
class ControllerMemoryState:
    """What a delay-independent controller sees: ``x(t)`` and ``v(t-d_max) .. v(t-1)``."""

    x: np.ndarray
    past_v: np.ndarray  # (d_max, m), oldest first

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.past_v.reshape(-1)])


@dataclass(frozen=True, eq=False)
class ReducedState:
    """State of the arbitrary-switching reduction: plant, pending inputs, past outputs."""

    x: np.ndarray
    pending: np.ndarray
    past_v: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.pending.reshape(-1), self.past_v.reshape(-1)])

    @classmethod
    def initial(cls, plant: SwitchedDelayPlant, x0) -> "ReducedState":
        z = linalg.zeros((plant.d_max, plant.m), plant.exact)
        return cls(plant.vector(x0), z, z.copy())


@dataclass(frozen=True, eq=False)
class MatrixSet:
    """A finite set of equally sized square matrices with one label per member."""

    members: tuple
    labels: tuple

    def __post_init__(self):
        members = tuple(m if linalg.is_exact(m) else np.asarray(m, dtype=np.float64) for m in self.members)
        labels = tuple(self.labels)
        if not members:
            raise ConfigurationError("a matrix set needs at least one member")
        dim = members[0].shape[0]
        for M in members:
            if M.ndim != 2 or M.shape != (dim, dim):
                raise ConfigurationError(f"members must all be {dim}x{dim}, got {M.shape}")
        if len(labels) != len(members):
            raise ConfigurationError("one label per member is required")
        if len(set(labels)) != len(labels):
            raise ConfigurationError("labels must be unique")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, matrices, labels=None) -> "MatrixSet":
        matrices = list(matrices)
        return cls(tuple(matrices), tuple(range(len(matrices))) if labels is None else tuple(labels))

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, label):
        return self.members[self.labels.index(label)]

    def as_float(self) -> np.ndarray:
        return np.stack([linalg.to_float(M) for M in self.members])

    def scaled(self, c) -> "MatrixSet":
        return MatrixSet(tuple(M * c for M in self.members), self.labels)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded run: row ``t`` holds ``x(t)``, ``pending(t)``, ``v(t)``, ``sigma(t)``, ``tau(t)``."""

    times: np.ndarray
    states: np.ndarray  # (T+1, n)
    pending: np.ndarray  # (T+1, d_max, m)
    inputs: np.ndarray  # (T+1, m)
    sigma: np.ndarray  # (T+1,)
    tau: np.ndarray  # (T+1,)

    @property
    def horizon(self) -> int:
        return len(self.times) - 1

    def extended(self, t: int) -> ExtendedState:
        return ExtendedState(self.states[t], self.pending[t])


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------


def build_extended(plant: SwitchedDelayPlant):
    """Return ``(A_e, {d: B_e(d)})`` for the in-flight-packet representation.

    ``A_e`` has ``A`` and ``B`` on its first block row and shifts the pending
    inputs up by one slot; ``B_e(d)`` drops ``v`` into slot ``d`` (``B`` itself
    when ``d = 0``).
    """
    n, m, dm, ex = plant.n, plant.m, plant.d_max, plant.exact
    size = n + m * dm
    Ae = linalg.zeros((size, size), ex)
    Ae[:n, :n] = plant.A
    if dm:
        Ae[:n, n : n + m] = plant.B
        for s in range(1, dm):
            r = n + (s - 1) * m
            c = n + s * m
            Ae[r : r + m, c : c + m] = linalg.eye(m, ex)
    Be = {}
    for d in plant.delays:
        col = linalg.zeros((size, m), ex)
        if d == 0:
            col[:n, :] = plant.B
        else:
            r = n + (d - 1) * m
            col[r : r + m, :] = linalg.eye(m, ex)
        Be[d] = col
    return Ae, Be


def delay_words(delays: Sequence[int], length: int) -> list[tuple[int, ...]]:
    return list(itertools.product(sorted(delays), repeat=length))


def _gain(plant: SwitchedDelayPlant, K, cols: int) -> np.ndarray:
    K = linalg.as_matrix(np.asarray(K, dtype=object).reshape(plant.m, -1), plant.arithmetic)
    if K.shape != (plant.m, cols):
        raise ConfigurationError(f"gain must be {plant.m}x{cols}, got {K.shape}")
    return K


def build_dd_closed_loop(plant: SwitchedDelayPlant, controller) -> MatrixSet:
    """Closed loop ``A_e + B_e(w[0]) K(w)`` for every look-ahead word ``w`` in ``D^N``.

    ``controller`` maps delay tuples to gains (a mapping or a callable).
    """
    N = plant.lookahead
    if N < 1:
        raise ConfigurationError("a delay-dependent controller needs look-ahead N >= 1")
    Ae, Be = build_extended(plant)
    size = Ae.shape[0]
    members, labels = [], []
    for word in delay_words(plant.delays, N):
        try:
            K = controller[word] if isinstance(controller, Mapping) else controller(word)
        except KeyError:
            K = None
        if K is None:
            raise ConfigurationError(f"controller has no gain for delay word {word}")
        members.append(Ae + Be[word[0]] @ _gain(plant, K, size))
        labels.append(word)
    return MatrixSet(tuple(members), tuple(labels))


def build_di_reduction(plant: SwitchedDelayPlant, K) -> MatrixSet:
    """Arbitrary-switching reduction of a delay-independent linear controller.

    The state is ``w = (x, u_1..u_dmax, v(t-dmax)..v(t-1))`` of dimension
    ``n + 2 m d_max``; member ``d`` applies ``v = K (x, past v)`` with delay ``d``.
    """
    if plant.lookahead != 0:
        raise ConfigurationError("the delay-independent reduction requires look-ahead N = 0")
    n, m, dm, ex = plant.n, plant.m, plant.d_max, plant.exact
    K = _gain(plant, K, n + m * dm)
    size = n + 2 * m * dm
    xs = slice(0, n)

    def pend(s):  # slot of u_s, s = 1..dm
        r = n + (s - 1) * m
        return slice(r, r + m)

    def past(j):  # slot of v(t - dm + j), j = 0..dm-1
        r = n + m * dm + j * m
        return slice(r, r + m)

    # v(t) = Kx x + sum_j Kv_j past_j, expressed as a row block over w
    Krow = linalg.zeros((m, size), ex)
    Krow[:, xs] = K[:, :n]
    for j in range(dm):
        Krow[:, past(j)] = K[:, n + j * m : n + (j + 1) * m]

    base = linalg.zeros((size, size), ex)
    base[xs, xs] = plant.A
    if dm:
        base[xs, pend(1)] = plant.B
        for s in range(1, dm):
            base[pend(s), pend(s + 1)] = linalg.eye(m, ex)
        for j in range(dm - 1):
            base[past(j), past(j + 1)] = linalg.eye(m, ex)
        base[past(dm - 1), :] = Krow

    members = []
    for d in plant.delays:
        M = base.copy()
        if d == 0:
            M[xs, :] = M[xs, :] + plant.B @ Krow
        else:
            M[pend(d), :] = M[pend(d), :] + Krow
        members.append(M)
    return MatrixSet(tuple(members), plant.delays)


def build_example3_matrices(a, b, k1, k2) -> MatrixSet:
    """Scalar plant, delays {0, 1}, controller remembering ``x(t-1)``.

    State ``(x(t-1), x(t), u_1(t))``; labels are the delays 0 and 1.
    """
    vals = [a, b, k1, k2]
    arith = linalg.detect_arithmetic(vals)
    a, b, k1, k2 = linalg.as_matrix(vals, arith, ndim=1)
    zero = a * 0
    one = zero + 1
    M0 = np.array([[zero, one, zero], [b * k1, a + b * k2, one], [zero, zero, zero]], dtype=object)
    M1 = np.array([[zero, one, zero], [zero, a, one], [b * k1, b * k2, zero]], dtype=object)
    if arith == linalg.FLOAT:
        M0, M1 = M0.astype(float), M1.astype(float)
    return MatrixSet((M0, M1), (0, 1))


def build_np_gadget(A1, A2) -> MatrixSet:
    """The pair ``{[[A1, I], [0, 0]], [[0, I], [A2, 0]]}``.

    Built as the delay-dependent closed loop of the plant ``A = 0, B = I`` with
    ``D = {0, 1}``, look-ahead 1 and gains ``K(0) = (A1 0)``, ``K(1) = (A2 0)``.
    """
    arith = linalg.detect_arithmetic(A1, A2)
    A1 = linalg.as_matrix(A1, arith)
    A2 = linalg.as_matrix(A2, arith)
    if A1.shape != A2.shape or A1.shape[0] != A1.shape[1]:
        raise ConfigurationError(f"A1 and A2 must be square of equal size, got {A1.shape} and {A2.shape}")
    n = A1.shape[0]
    ex = arith == linalg.RATIONAL
    plant = SwitchedDelayPlant(linalg.zeros((n, n), ex), linalg.eye(n, ex), (0, 1), 1, arith)
    pad = linalg.zeros((n, n), ex)
    gains = {(0,): np.concatenate([A1, pad], axis=1), (1,): np.concatenate([A2, pad], axis=1)}
    return build_dd_closed_loop(plant, gains)


# --------------------------------------------------------------------------
# trajectory semantics
# --------------------------------------------------------------------------


def step(plant: SwitchedDelayPlant, state: ExtendedState, sigma_t, v_t) -> ExtendedState:
    """Advance one step: packets due now are summed into the plant input."""
    d = plant.check_delay(sigma_t)
    v = plant.vector(v_t) if not isinstance(v_t, np.ndarray) else v_t.reshape(-1)
    dm = plant.d_max
    u_now = state.pending[0] if dm else linalg.zeros(plant.m, plant.exact)
    if d == 0:
        u_now = u_now + v
    x = plant.A @ state.x + plant.B @ u_now
    pending = linalg.zeros((dm, plant.m), plant.exact)
    if dm > 1:
        pending[:-1] = state.pending[1:]
    if d > 0:
        pending[d - 1] = pending[d - 1] + v
    return ExtendedState(x, pending)


@dataclass(frozen=True, eq=False)
class Observation:
    """Everything a controller may use at time ``t``.

    ``past_sigma`` is ``None`` for delay-independent (N = 0) runs; entries for
    negative times are ``None``.  ``upcoming_sigma`` is ``sigma(t..t+N-1)``.
    """

    t: int
    x: np.ndarray
    past_v: np.ndarray
    past_sigma: tuple | None
    upcoming_sigma: tuple

    def pending(self) -> np.ndarray:
        """Reconstruct ``u_1..u_dmax`` from past outputs and delays."""
        if self.past_sigma is None:
            raise ConfigurationError("pending inputs are not observable without the delay history")
        dm, m = self.past_v.shape
        out = self.past_v[:0].copy() if dm == 0 else self.past_v * 0
        for j, s in enumerate(self.past_sigma):
            if s is None:
                continue
            age = dm - j  # packet sent at t - age
            slot = s - age  # due at t + slot; u_{slot+1}
            if 0 <= slot < dm:
                out[slot] = out[slot] + self.past_v[j]
        return out

    def extended_state(self) -> np.ndarray:
        return np.concatenate([self.x, self.pending().reshape(-1)])

    def memory_state(self) -> np.ndarray:
        return np.concatenate([self.x, self.past_v.reshape(-1)])


class Controller(Protocol):
    lookahead: int

    def __call__(self, obs: Observation) -> np.ndarray: ...


class ZeroController:
    lookahead = 0

    def __call__(self, obs: Observation):
        return obs.past_v[0] * 0 if obs.past_v.shape[0] else np.zeros(obs.past_v.shape[1])


class LinearDIController:
    """``v(t) = K (x(t), v(t-dmax), ..., v(t-1))``."""

    lookahead = 0

    def __init__(self, K):
        self.K = K if isinstance(K, np.ndarray) else linalg.as_matrix(K, linalg.detect_arithmetic(K))

    def __call__(self, obs: Observation):
        return self.K @ obs.memory_state()


class LinearDDController:
    """``v(t) = K(sigma(t..t+N-1)) x_e(t)`` with gains keyed by delay words."""

    def __init__(self, gains: Mapping, lookahead: int):
        self.gains = {
            w: K if isinstance(K, np.ndarray) else linalg.as_matrix(K, linalg.detect_arithmetic(K)) for w, K in gains.items()
        }
        self.lookahead = int(lookahead)

    def __call__(self, obs: Observation):
        return self.gains[tuple(obs.upcoming_sigma)] @ obs.extended_state()


class OpenLoopController:
    """Replays fixed control values ``{t: v}``; zero elsewhere."""

    lookahead = 0

    def __init__(self, values: Mapping[int, object], m: int = 1):
        self.values = dict(values)
        self.m = m

    def __call__(self, obs: Observation):
        v = self.values.get(obs.t)
        zero = obs.x[: self.m] * 0
        if v is None:
            return zero
        return zero + np.asarray(v, dtype=object if linalg.is_exact(obs.x) else float).reshape(-1)


def _signal_values(signal, count: int) -> list[int]:
    if callable(getattr(signal, "emit", None)):
        return [signal.emit(t) for t in range(count)]
    if callable(signal):
        return [signal(t) for t in range(count)]
    seq = list(signal)
    if len(seq) < count:
        raise HorizonError(f"signal has {len(seq)} values, {count} needed")
    return seq[:count]


def simulate(plant: SwitchedDelayPlant, controller, signal, x0, T: int) -> Trajectory:
    """Run the closed loop for ``T`` steps and record ``t = 0..T``.

    ``signal`` may be a :class:`~sdtk.signals.SwitchingSignal`, a callable of
    ``t`` or a sequence; it must be defined up to ``T + N - 1``.
    """
    if T < 1:
        raise HorizonError("horizon must be at least 1")
    N = int(getattr(controller, "lookahead", 0))
    if N > plant.lookahead:
        raise ConfigurationError(f"controller needs look-ahead {N} but the plant allows {plant.lookahead}")
    sig = _signal_values(signal, T + max(N, 1))
    for s in sig:
        plant.check_delay(s)
    n, m, dm, ex = plant.n, plant.m, plant.d_max, plant.exact
    state = ExtendedState.zero(plant, x0)
    past_v = linalg.zeros((dm, m), ex)
    past_sigma = [None] * dm
    dtype = object if ex else float
    states = np.empty((T + 1, n), dtype=dtype)
    pend = np.empty((T + 1, dm, m), dtype=dtype)
    inputs = np.empty((T + 1, m), dtype=dtype)
    for t in range(T + 1):
        obs = Observation(
            t,
            state.x.copy(),
            past_v.copy(),
            tuple(past_sigma) if N >= 1 else None,
            tuple(sig[t : t + N]),
        )
        v = np.asarray(controller(obs), dtype=dtype).reshape(-1)
        if v.shape != (m,):
            raise ConfigurationError(f"controller returned shape {v.shape}, expected ({m},)")
        states[t] = state.x
        pend[t] = state.pending
        inputs[t] = v
        if t < T:
            state = step(plant, state, sig[t], v)
        if dm:
            past_v[:-1] = past_v[1:]
            past_v[-1] = v
            past_sigma = past_sigma[1:] + [sig[t]]
    sigma = np.asarray(sig[: T + 1], dtype=np.int64)
    tau = actuation_mask(sigma, T)
    return Trajectory(np.arange(T + 1), states, pend, inputs, sigma, tau)


def actuation_mask(sigma, T: int) -> np.ndarray:
    """``tau(0..T)`` from the delays ``sigma(0..T)`` (later packets cannot arrive earlier)."""
    sigma = np.asarray(sigma, dtype=np.int64)[: T + 1]
    return arrival_mask(np.arange(len(sigma)) + sigma, T)


def iterate_matrix_set(mset: MatrixSet, labels: Sequence, w0) -> np.ndarray:
    """States ``w(0..len(labels))`` of ``w(t+1) = M_{labels[t]} w(t)``."""
    if linalg.is_exact(mset.members[0]):
        out = [np.asarray(w0, dtype=object).reshape(-1)]
        for lab in labels:
            out.append(mset[lab] @ out[-1])
        return np.stack(out)
    from ._kernels import iterate

    idx = [mset.labels.index(lab) for lab in labels]
    return iterate(mset.as_float(), idx, np.asarray(w0, dtype=float).reshape(-1))
