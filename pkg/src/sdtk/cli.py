"""Command-line front end.

Exit status is 0 when an analysis completes (whatever its verdict), 1 when a
``reproduce`` check fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

import numpy as np

from . import io, linalg
from .controllability import block_cyclic_test, decide
from .errors import SdtkError
from .jsr import DEFAULT_DEPTH, DEFAULT_NODES, is_stable
from .model import (
    LinearDDController,
    LinearDIController,
    ZeroController,
    build_dd_closed_loop,
    build_di_reduction,
    build_example3_matrices,
    simulate,
)
from .reproduce import REPRODUCERS, rotation_rate
from .signals import RandomSignal
from .synthesis import deadbeat_plan, evaluate_di_gain, rotation_plant, scalar_deadbeat

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(obj):
    text = io.dumps(obj)
    print(text)


def _vector(text: str | None, n: int, exact: bool):
    if text is None:
        vals = [0] * n
        vals[0] = 1
    else:
        vals = [s.strip() for s in text.split(",") if s.strip()]
        if len(vals) != n:
            raise InputError(f"expected {n} comma-separated values, got {len(vals)}")
    if exact:
        try:
            return [Fraction(v) for v in vals]
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return [float(v) for v in vals]


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InputError(f"--{name} is required")


def _plant(args, strict=True):
    _require(args, "system")
    return io.load_system(args.system, args.arith, strict)


def _signal(args, plant):
    network = io.load_network(args.network) if args.network else None
    if args.signal is None:
        if args.seed is None:
            raise InputError("--signal or --seed is required")
        return RandomSignal(plant.delays, args.seed)
    return io.load_signal(args.signal, domain=plant.delays, network=network, seed=args.seed)


def _budget(args) -> dict:
    return {"max_depth": args.depth, "max_nodes": args.nodes, "workers": args.workers}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_stability(args) -> int:
    _require(args, "gain")
    plant = _plant(args, strict=False)
    gain = io.load_gain(args.gain)
    if gain.kind == "example3":
        if plant.n != 1 or plant.delays != (0, 1):
            raise InputError("example3 gains need a scalar plant with delays {0, 1}")
        a, b = plant.A[0, 0], plant.B[0, 0]
        results = []
        for k1 in gain.k1:
            for k2 in gain.k2:
                v = is_stable(build_example3_matrices(a, b, k1, k2), args.epsilon, **_budget(args))
                results.append({"k1": k1, "k2": k2, **v.to_dict()})
        if gain.is_sweep:
            outcomes = sorted({r["outcome"] for r in results})
            _emit({"outcome": outcomes[0] if len(outcomes) == 1 else "Mixed", "grid": results})
        else:
            _emit(results[0])
        return EXIT_OK
    if gain.kind == "di":
        mset = build_di_reduction(plant, gain.K)
    else:
        mset = build_dd_closed_loop(plant, gain.gains)
    _emit(is_stable(mset, args.epsilon, **_budget(args)).to_dict())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require(args, "gain")
    plant = _plant(args, strict=False)
    gain = io.load_gain(args.gain)
    if gain.kind != "di":
        raise InputError("evaluate gain needs a delay-independent gain file {'K': ...}")
    _emit(evaluate_di_gain(plant, gain.K, args.epsilon, **_budget(args)).to_dict())
    return EXIT_OK


def cmd_controllability(args) -> int:
    plant = _plant(args)
    rtol = None if plant.exact else args.rtol
    out = decide(plant, rtol=rtol).to_dict()
    if args.block_cyclic:
        bc = block_cyclic_test(plant)
        out["block_cyclic"] = {"outcome": bc.outcome.value, "witness": bc.witness.to_dict() if bc.witness else None}
    _emit(out)
    return EXIT_OK


def _write_csv(args, traj):
    if args.out:
        io.write_trajectory_csv(traj, args.out)


def cmd_synthesize(args) -> int:
    plant = _plant(args)
    if args.kind == "scalar":
        if plant.n != 1 or plant.m != 1:
            raise InputError("scalar dead-beat needs n = m = 1")
        ctl = scalar_deadbeat(plant.A[0, 0], plant.B[0, 0], plant.delays)
        report = {
            "controller": "scalar_deadbeat",
            "gains": {str(d): list(K) for d, K in ctl.gains.items()},
            "zero_by": ctl.d_max + 1,
        }
        if args.signal or args.seed is not None:
            sig = _signal(args, plant)
            T = args.horizon or ctl.d_max + 5
            traj = simulate(plant.with_lookahead(max(plant.lookahead, 1)), ctl, sig, _vector(args.x0, 1, plant.exact), T)
            report["final_state"] = list(traj.states[-1])
            _write_csv(args, traj)
        _emit(report)
        return EXIT_OK
    sig = _signal(args, plant)
    x0 = _vector(args.x0, plant.n, plant.exact)
    xf = _vector(args.xf or ",".join(["0"] * plant.n), plant.n, plant.exact)
    plan = deadbeat_plan(plant, sig, x0, xf)
    traj = simulate(plant, plan.controller(plant.m), sig, x0, plan.reach_time)
    err = np.asarray(linalg.to_float(np.asarray(traj.states[-1]) - plan.target)).ravel()
    _emit(
        {
            "controller": "deadbeat_plan",
            "reach_time": plan.reach_time,
            "values": {str(t): v for t, v in sorted(plan.values.items())},
            "replay_error": float(np.max(np.abs(err))) if err.size else 0.0,
        }
    )
    _write_csv(args, traj)
    return EXIT_OK


def cmd_simulate(args) -> int:
    plant = _plant(args, strict=False)
    sig = _signal(args, plant)
    if args.gain:
        gain = io.load_gain(args.gain)
        if gain.kind == "di":
            ctl = LinearDIController(gain.K)
        elif gain.kind == "dd":
            N = max(len(w) for w in gain.gains)
            ctl = LinearDDController(gain.gains, N)
            plant = plant.with_lookahead(max(plant.lookahead, N))
        else:
            raise InputError("simulate supports 'K' and 'dd' gain files")
    else:
        ctl = ZeroController()
    traj = simulate(plant, ctl, sig, _vector(args.x0, plant.n, plant.exact), args.horizon or 20)
    text = io.trajectory_csv(traj)
    if args.out:
        io.write_trajectory_csv(traj, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rotation(args) -> int:
    alpha = args.alpha if args.alpha is not None else math.pi / 60
    plant = rotation_plant(alpha)
    if args.signal:
        sig = io.load_signal(args.signal, domain=(0, 1), seed=args.seed)
    else:
        sig = RandomSignal((0, 1), 0 if args.seed is None else args.seed)
    T = args.horizon or 300
    rate, ctl = rotation_rate(alpha, sig, T)
    _emit(
        {
            "alpha": alpha,
            "horizon": T,
            "rate": rate,
            "cycles": len(ctl.cycles),
            "inferred_matches": sum(int(a == b) for a, b in zip(ctl.inferred, sig.values(len(ctl.inferred)))),
        }
    )
    if args.out:
        traj = simulate(plant, type(ctl)(alpha), sig, [1.0, 0.0], T)
        io.write_trajectory_csv(traj, args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    report = REPRODUCERS[args.example]()
    _emit(report.to_dict())
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} example {args.example}: {c.name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _positive(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system")
    common.add_argument("--gain")
    common.add_argument("--network")
    common.add_argument("--signal")
    common.add_argument("--epsilon", type=_positive, default=1e-2)
    common.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    common.add_argument("--nodes", type=int, default=DEFAULT_NODES)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--arith", choices=(linalg.RATIONAL, linalg.FLOAT))
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--horizon", type=int)
    common.add_argument("--x0", help="comma-separated initial state")
    common.add_argument("--rtol", type=float, default=1e-9)

    p = argparse.ArgumentParser(prog="sdtk", description="Linear plants actuated through switching-delay networks.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("stability", parents=[common], help="JSR-based stability of a closed loop")
    s.set_defaults(func=cmd_stability)
    s = sub.add_parser("controllability", parents=[common], help="controllability with unbounded look-ahead")
    s.add_argument("--block-cyclic", action="store_true", help="also run the block-cyclic test")
    s.set_defaults(func=cmd_controllability)
    s = sub.add_parser("synthesize", parents=[common], help="dead-beat controllers")
    s.add_argument("kind", choices=("deadbeat", "scalar"))
    s.add_argument("--xf", help="comma-separated target state (default origin)")
    s.set_defaults(func=cmd_synthesize)
    s = sub.add_parser("evaluate", parents=[common], help="stability of a delay-independent gain")
    s.add_argument("what", choices=("gain",))
    s.set_defaults(func=cmd_evaluate)
    s = sub.add_parser("rotation", parents=[common], help="nonlinear controller on the rotation plant")
    s.add_argument("what", choices=("demo",))
    s.add_argument("--alpha", type=float)
    s.set_defaults(func=cmd_rotation)
    s = sub.add_parser("simulate", parents=[common], help="closed-loop trajectory as CSV")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("reproduce", parents=[common], help="rerun a worked example and check it")
    s.add_argument("example", type=int, choices=sorted(REPRODUCERS))
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, SdtkError, ValueError, KeyError, TypeError) as exc:
        print(f"sdtk: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
