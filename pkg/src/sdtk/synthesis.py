"""Controller constructions: dead-beat laws, gain evaluation and the rotation controller."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, linalg
from .controllability import controllability_matrix, n_star
from .errors import ConfigurationError, PlanError
from .jsr import StabilityVerdict, is_stable, linear_rate_floor
from .model import Observation, OpenLoopController, SwitchedDelayPlant, build_di_reduction

# --------------------------------------------------------------------------
# scalar dead-beat
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarDeadbeatController:
    """Switching law ``v(t) = K(sigma(t)) x_e(t)`` for a scalar plant.

    ``K(d) = K*(d_max) a^(d - d_max)`` with
    ``K*(d) = (-a^(d+1)/b, -a^d, ..., -a)``.  Needs look-ahead 1 (the current
    delay) and drives the state to zero by ``t = d_max + 1``.
    """

    a: object
    b: object
    delays: tuple[int, ...]
    gains: Mapping[int, np.ndarray] = field(repr=False)
    lookahead: int = 1

    @property
    def d_max(self) -> int:
        return max(self.delays)

    def gain_table(self) -> dict:
        """Gains keyed by one-letter delay words, for :func:`build_dd_closed_loop`."""
        return {(d,): K.reshape(1, -1) for d, K in self.gains.items()}

    def __call__(self, obs: Observation):
        d = obs.upcoming_sigma[0]
        return np.atleast_1d(self.gains[d] @ obs.extended_state())


def scalar_deadbeat(a, b, delays: Sequence[int]) -> ScalarDeadbeatController:
    """Gains of the scalar switching dead-beat law.

    With ``a = 0`` every gain is zero: ``x(t+1) = b u(t)`` and no packet is ever
    sent, so the state is zero from ``t = 1`` on.
    """
    D = tuple(sorted(set(int(d) for d in delays)))
    if not D or D[0] < 0:
        raise ConfigurationError("delay set must be nonempty and nonnegative")
    arith = linalg.detect_arithmetic([a, b])
    a, b = linalg.as_matrix([a, b], arith, ndim=1)
    if b == 0:
        raise ConfigurationError("b must be nonzero")
    dm = D[-1]
    zero = a * 0
    if a == 0:
        gains = {d: np.array([zero] * (dm + 1), dtype=object if arith == linalg.RATIONAL else float) for d in D}
    else:
        kstar = [-(a ** (dm + 1)) / b] + [-(a ** (dm + 1 - s)) for s in range(1, dm + 1)]
        gains = {}
        for d in D:
            scale = a ** (d - dm)
            gains[d] = np.array([k * scale for k in kstar], dtype=object if arith == linalg.RATIONAL else float)
    return ScalarDeadbeatController(a, b, D, gains)


# --------------------------------------------------------------------------
# look-ahead dead-beat plan
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeadbeatPlan:
    """Open-loop packet values that put the state on ``target`` at ``reach_time``.

    ``matrix_time`` is the first ``t`` with ``rank C_t = n``; the plant state
    reaches the target one step later, ``reach_time = matrix_time + 1``.
    """

    matrix_time: int
    reach_time: int
    values: dict  # send time -> v
    target: np.ndarray
    x0: np.ndarray

    def controller(self, m: int = 1) -> OpenLoopController:
        return OpenLoopController({t: [v] for t, v in self.values.items()}, m)


def deadbeat_plan(plant: SwitchedDelayPlant, signal_prefix, x0, x_f, *, rtol: float | None = None) -> DeadbeatPlan:
    """Steer ``x0`` to ``x_f`` as early as the delay prefix allows.

    Scans ``t = 0..min(N*, len(prefix) - 1)`` for the first full-rank ``C_t`` and
    solves ``C_t v = x_f - A^(t+1) x0`` (minimum-norm when underdetermined).

    Raises
    ------
    PlanError
        If ``C_t`` never reaches full rank on the prefix.
    """
    if plant.m != 1:
        raise ConfigurationError("dead-beat planning covers single-input plants only")
    prefix = [int(s) for s in (signal_prefix.values(n_star(plant.n, len(plant.delays)) + 1)
                               if hasattr(signal_prefix, "values") else signal_prefix)]
    x0 = plant.vector(x0)
    xf = plant.vector(x_f)
    limit = min(n_star(plant.n, len(plant.delays)), len(prefix) - 1)
    for t in range(limit + 1):
        snap = controllability_matrix(plant, prefix, t, rtol)
        if snap.rank == plant.n:
            break
    else:
        raise PlanError(f"C_t never reaches rank {plant.n} within t <= {limit}")
    rhs = xf - linalg.matrix_power(plant.A, t + 1) @ x0
    v = linalg.min_norm_solve(snap.columns, rhs)
    values = {tp: v[i] for i, tp in enumerate(snap.send_times)}
    return DeadbeatPlan(t, t + 1, values, xf, x0)


# --------------------------------------------------------------------------
# delay-independent gains
# --------------------------------------------------------------------------


def evaluate_di_gain(plant: SwitchedDelayPlant, K, epsilon: float = 1e-2, **budget) -> StabilityVerdict:
    """Stability of ``v(t) = K (x(t), v(t-d_max), ..., v(t-1))`` under arbitrary delays."""
    return is_stable(build_di_reduction(plant, K), epsilon, **budget)


# --------------------------------------------------------------------------
# rotation plant: nonlinear controller and the linear floor
# --------------------------------------------------------------------------

MAX_ROTATION_ANGLE = math.pi / 30


def rotation_plant(alpha: float) -> SwitchedDelayPlant:
    c, s = math.cos(alpha), math.sin(alpha)
    return SwitchedDelayPlant([[c, -s], [s, c]], [[1.0], [0.0]], (0, 1), 0, "float")


@dataclass
class CycleRecord:
    t: int
    w: float
    r_norm: float


class RotationController:
    """Delay-independent nonlinear law for the rotation plant with ``D = {0, 1}``.

    Works in cycles of two or three steps around the line ``L`` of slope
    ``-tan(3 alpha / 2)`` through the origin:

    ``project``
        ``x`` is near ``L`` at ``(-w cot(3 alpha/2), w)``; send
        ``v = w cos(alpha/2) / sin(3 alpha/2)``, which moves ``A x`` (or
        ``A^2 x``) onto the vertical axis.
    ``remap``
        Infer the last delay from the observed jump in the first coordinate,
        predict ``x_hat`` = next state without a new packet and send the
        horizontal offset that lands ``x_hat`` on ``L``.
    ``wait``
        If the remap packet was delayed, send nothing for one step.

    Each completed cycle shrinks ``|w|`` by about three.
    """

    lookahead = 0

    def __init__(self, alpha: float):
        alpha = float(alpha)
        if not 0.0 < alpha <= MAX_ROTATION_ANGLE:
            raise ConfigurationError(f"alpha must lie in (0, pi/30], got {alpha}")
        self.alpha = alpha
        c, s = math.cos(alpha), math.sin(alpha)
        self.A = np.array([[c, -s], [s, c]])
        self.direction = np.array([-math.cos(1.5 * alpha), math.sin(1.5 * alpha)])
        self.cot = 1.0 / math.tan(1.5 * alpha)
        self.gain = math.cos(alpha / 2) / math.sin(1.5 * alpha)
        self.reset()

    def reset(self):
        self.phase = "remap"
        self._last = None
        self.prev_x = None
        self.prev_v = 0.0
        self.pending = 0.0  # u_1: input due at the current step from older packets
        self.inferred: list[int] = []
        self.cycles: list[CycleRecord] = []

    def _infer(self, x) -> int:
        applied = (x - self.A @ self.prev_x)[0]
        pred0 = self.pending + self.prev_v
        pred1 = self.pending
        sigma = 0 if abs(applied - pred0) <= abs(applied - pred1) else 1
        self.pending = self.prev_v if sigma == 1 else 0.0
        self.inferred.append(sigma)
        return sigma

    def project(self, x) -> tuple[float, np.ndarray]:
        """Signed coordinate ``w`` of the projection of ``x`` onto ``L`` and the residual."""
        p = (x @ self.direction) * self.direction
        return float(p[1]), x - p

    def __call__(self, obs: Observation):
        x = np.asarray(obs.x, dtype=float)
        if obs.t == 0:
            self.reset()
            sigma = None
        else:
            sigma = self._infer(x)
        phase = self.phase
        if phase == "project" and sigma == 1 and self._last == "remap":
            phase = "wait"
        if phase == "project":
            w, r = self.project(x)
            self.cycles.append(CycleRecord(obs.t, w, float(np.linalg.norm(r))))
            v = w * self.gain
            self.phase = "remap"
        elif phase == "remap":
            xh = self.A @ x + np.array([self.pending, 0.0])
            v = -xh[0] - xh[1] * self.cot
            self.phase = "project"
        else:
            v = 0.0
            self.phase = "project"
        self._last = phase
        self.prev_x = x
        self.prev_v = float(v)
        return np.array([v])


def rotation_nonlinear_controller(alpha: float) -> RotationController:
    return RotationController(alpha)


@dataclass(frozen=True)
class LinearFloorReport:
    alpha: float
    grid_min: float
    argmin: tuple[float, float]
    floor: float
    passes: bool
    eig_product_error: float
    det_error: float


def rotation_closed_loop(alpha: float, k1: float, k2: float) -> tuple[np.ndarray, np.ndarray]:
    """The two closed-loop matrices of a linear law ``v = k1 x1 + k2 x2``."""
    c, s = math.cos(alpha), math.sin(alpha)
    A0 = np.array([[c + k1, -s + k2, 1.0], [s, c, 0.0], [0.0, 0.0, 0.0]])
    A1 = np.array([[c, -s, 1.0], [s, c, 0.0], [k1, k2, 0.0]])
    return A0, A1


def rotation_linear_floor_check(
    alpha: float,
    k1_grid: Sequence[float] | None = None,
    k2_grid: Sequence[float] | None = None,
    *,
    samples: int = 100,
    seed: int = 0,
) -> LinearFloorReport:
    """Smallest ``max(rho(A_0), rho(A_1))`` over a gain grid, with two algebraic checks.

    The default grid is ``[-3, 3]^2`` at step 0.01.  The checks compare the
    product of the nonzero eigenvalues of ``A_0`` with ``1 + k1 cos a - k2 sin a``
    and ``det A_1`` with ``k2 sin a - k1 cos a`` on random gains.
    """
    grid = np.round(np.arange(-300, 301) * 0.01, 12)
    k1 = np.asarray(grid if k1_grid is None else k1_grid, dtype=float)
    k2 = np.asarray(grid if k2_grid is None else k2_grid, dtype=float)
    radii = _kernels.rotation_grid_radii(alpha, k1, k2)
    i, j = np.unravel_index(int(np.argmin(radii)), radii.shape)
    floor = linear_rate_floor()
    rng = np.random.default_rng(seed)
    c, s = math.cos(alpha), math.sin(alpha)
    eig_err = det_err = 0.0
    for g1, g2 in rng.uniform(-3, 3, size=(samples, 2)):
        A0, A1 = rotation_closed_loop(alpha, g1, g2)
        ev = np.linalg.eigvals(A0)
        nz = ev[np.argsort(np.abs(ev))[1:]]
        eig_err = max(eig_err, abs(np.prod(nz).real - (1 + g1 * c - g2 * s)))
        det_err = max(det_err, abs(np.linalg.det(A1) - (g2 * s - g1 * c)))
    gmin = float(radii[i, j])
    return LinearFloorReport(alpha, gmin, (float(k1[i]), float(k2[j])), floor, gmin >= floor - 1e-6, eig_err, det_err)
