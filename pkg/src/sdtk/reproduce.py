"""Canned instances of the four worked examples and their documented checks."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .controllability import ControllabilityOutcome, decide, rank_history, witness_keeps_rank_deficient
from .jsr import Outcome, is_stable, linear_rate_floor
from .model import OpenLoopController, SwitchedDelayPlant, build_example3_matrices, simulate
from .signals import PeriodicSignal, RandomSignal, example1_signal, example2_signal
from .synthesis import RotationController, rotation_linear_floor_check, rotation_plant


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class Report:
    example: int
    checks: list[Check]
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "example": self.example,
            "passed": self.passed,
            "seconds": self.seconds,
            "checks": [{"name": c.name, "passed": c.passed, **c.detail} for c in self.checks],
        }


# --------------------------------------------------------------------------
# instances
# --------------------------------------------------------------------------


def example1_plant() -> SwitchedDelayPlant:
    return SwitchedDelayPlant([[0, 2], [2, 0]], [[0], [1]], (0, 1))


def example2_plant(form: str = "printed", theta1: float = math.pi / 120, theta2: float = math.pi / 60) -> SwitchedDelayPlant:
    """Two 2x2 blocks with ``b = (1, 1, 1, 1)`` and ``D = {0..121}``.

    ``form="printed"`` puts ``sin(theta)`` on the block diagonal as written;
    ``form="rotation"`` uses the rotation by ``theta`` whose eigenvalue phases
    are ``theta``.
    """
    A = np.zeros((4, 4))
    for k, th in enumerate((theta1, theta2)):
        c, s = math.cos(th), math.sin(th)
        if form == "printed":
            blk = [[s, -c], [c, s]]
        elif form == "rotation":
            blk = [[c, -s], [s, c]]
        else:
            raise ValueError(f"unknown form {form!r}")
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = blk
    return SwitchedDelayPlant(A, np.ones((4, 1)), tuple(range(122)), 0, "float")


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------


def example1(horizon: int = 50, state_horizon: int = 20, seed: int = 0) -> Report:
    t0 = time.perf_counter()
    plant = example1_plant()
    sig = example1_signal()
    ranks = rank_history(plant, sig, horizon)
    checks = [Check("rank_C_t_equals_1", bool(np.all(ranks == 1)), {"ranks": ranks.tolist()})]
    verdict = decide(plant)
    ok = verdict.outcome == ControllabilityOutcome.UNCONTROLLABLE and verdict.witness is not None
    ok = ok and witness_keeps_rank_deficient(plant, verdict.witness, 3 * verdict.steps_bound)
    checks.append(Check("decide_uncontrollable", ok, {"verdict": verdict.to_dict()}))
    # x_1(t) = 2^t at even t, for arbitrary inputs, from x(0) = (1, 0)
    rng = np.random.default_rng(seed)
    bad = []
    for trial in range(5):
        vals = {t: [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))] for t in range(state_horizon + 1)}
        if trial == 0:
            vals = {t: [Fraction(0)] for t in vals}
        tr = simulate(plant, OpenLoopController(vals), sig, [1, 0], state_horizon)
        for t in range(0, state_horizon + 1, 2):
            if tr.states[t][0] != 2**t:
                bad.append({"trial": trial, "t": t, "x1": str(tr.states[t][0])})
                break
    checks.append(Check("x1_equals_2_pow_t_at_even_t", not bad, {"counterexamples": bad}))
    return Report(1, checks, time.perf_counter() - t0)


def example2(horizon: int = 500, triples: int = 20, seed: int = 0, rtol: float = 1e-8, form: str = "printed", signal=None) -> Report:
    t0 = time.perf_counter()
    plant = example2_plant(form)
    sig = example2_signal() if signal is None else signal
    ranks = rank_history(plant, sig, horizon, rtol)
    full = np.nonzero(ranks >= 4)[0]
    checks = [
        Check(
            "rank_C_t_below_4",
            len(full) == 0,
            {"max_rank": int(ranks.max()), "first_full_rank_t": int(full[0]) if len(full) else None},
        )
    ]
    A = linalg.to_float(plant.A)
    b = np.ones(4)
    pw = [b]
    for _ in range(121):
        pw.append(A @ pw[-1])
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(triples):
        t1, t2, t3 = sorted(int(x) for x in rng.choice(np.arange(2, 121), 3, replace=False))
        r = linalg.rank(np.stack([b, pw[t1], pw[t2], pw[t3]], axis=1), rtol)
        if r != 4:
            bad.append([t1, t2, t3])
    checks.append(Check("sampled_triples_full_rank", not bad, {"failures": bad}))
    return Report(2, checks, time.perf_counter() - t0)


def _ex3_verdict(a, k1, k2, epsilon):
    return is_stable(build_example3_matrices(float(a), 1.0, float(k1), float(k2)), epsilon)


def example3(grid=None) -> Report:
    t0 = time.perf_counter()
    grid = np.round(np.linspace(-3.0, 3.0, 61), 12) if grid is None else np.asarray(grid, dtype=float)
    checks = []
    bad = [(float(k1), float(k2)) for k1 in grid for k2 in grid if _ex3_verdict(4, k1, k2, 1e-2).outcome != Outcome.UNSTABLE]
    checks.append(Check("a4_unstable_on_grid", not bad, {"grid_points": len(grid) ** 2, "failures": bad[:10]}))
    for a, k1, k2, eps in ((1.1, 0.0, -0.5, 0.02), (2.0, 0.4, -1.5, 1e-2)):
        v = _ex3_verdict(a, k1, k2, eps)
        checks.append(
            Check(
                f"a{a}_k1_{k1}_k2_{k2}_stable",
                v.outcome == Outcome.STABLE,
                {"lower": v.bounds.lower, "upper": v.bounds.upper},
            )
        )
    bad = [float(k2) for k2 in grid if _ex3_verdict(2, 0.0, k2, 1e-2).outcome != Outcome.UNSTABLE]
    checks.append(Check("a2_k1_0_unstable_on_k2_grid", not bad, {"failures": bad}))
    return Report(3, checks, time.perf_counter() - t0)


def rotation_rate(alpha: float, signal, T: int = 300, x0=(1.0, 0.0)) -> tuple[float, RotationController]:
    ctl = RotationController(alpha)
    tr = simulate(rotation_plant(alpha), ctl, signal, list(x0), T)
    norm = float(np.linalg.norm(np.asarray(tr.states[-1], dtype=float)))
    return norm ** (1.0 / T), ctl


def example4(alpha: float = math.pi / 60, T: int = 300, n_random: int = 100, word_length: int = 10, bound: float = 0.72) -> Report:
    t0 = time.perf_counter()
    worst = 0.0
    sigs = [RandomSignal((0, 1), s) for s in range(n_random)]
    sigs += [PeriodicSignal(w, (), (0, 1)) for w in itertools.product((0, 1), repeat=word_length)]
    for s in sigs:
        worst = max(worst, rotation_rate(alpha, s, T)[0])
    checks = [Check("nonlinear_rate", worst <= bound, {"worst_rate": worst, "bound": bound, "signals": len(sigs)})]
    rep = rotation_linear_floor_check(alpha)
    checks.append(Check("linear_grid_floor", rep.grid_min >= 0.7548, {"grid_min": rep.grid_min, "argmin": list(rep.argmin)}))
    floor = linear_rate_floor()
    checks.append(Check("linear_rate_floor", abs(floor - 0.754878) <= 1e-6, {"floor": floor}))
    return Report(4, checks, time.perf_counter() - t0)


REPRODUCERS = {1: example1, 2: example2, 3: example3, 4: example4}
