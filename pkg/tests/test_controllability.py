import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dfs_controllable

from sdtk import linalg
from sdtk.controllability import (
    CONTROLLABLE,
    UNCONTROLLABLE,
    BlockCyclicStructure,
    Witness,
    algorithm1,
    block_cyclic_test,
    classify_nilpotent,
    controllability_matrix,
    decide,
    fitting_split,
    n_star,
    nilpotent_oracle,
    rank_history,
    witness_keeps_rank_deficient,
)
from sdtk.errors import ConfigurationError, SingularMatrixError, UnsupportedInstanceError
from sdtk.model import OpenLoopController, SwitchedDelayPlant, simulate
from sdtk.reproduce import example1_plant, example2_plant
from sdtk.signals import PeriodicSignal, RandomSignal, actuation_times, example1_signal, example2_signal

entries = st.integers(-2, 2)


@st.composite
def small_plants(draw, regular=None):
    n = draw(st.integers(1, 3))
    A = draw(st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n))
    if regular is not None:
        inv = linalg.is_invertible(linalg.as_matrix(A, linalg.RATIONAL))
        if inv != regular:
            A = [[int(i == j) * 2 for j in range(n)] for i in range(n)] if regular else [[0] * n for _ in range(n)]
    b = draw(st.lists(entries, min_size=n, max_size=n))
    D = draw(st.sets(st.integers(0, 3), min_size=1, max_size=3))
    return SwitchedDelayPlant(A, [[x] for x in b], tuple(D), 0, linalg.RATIONAL, strict=False)


def _oracle(plant):
    return dfs_controllable(plant.A.tolist(), plant.B[:, 0].tolist(), plant.delays)


def _witness_horizon(plant):
    return max(3 * n_star(plant.n, len(plant.delays)), 10 * (plant.d_max + plant.n))


# --------------------------------------------------------------------------
# C_t and N*
# --------------------------------------------------------------------------


def test_n_star_values():
    assert n_star(2, 2) == 15
    assert n_star(3, 3) == 84
    assert n_star(1, 1) == 3


def test_controllability_matrix_columns():
    # a = 2, sigma = (1, 0, 1): at t = 2 packets 0 and 1 have arrived at times 1 and 1
    p = SwitchedDelayPlant([[2]], [[1]], (0, 1))
    snap = controllability_matrix(p, [1, 0, 1], 2)
    assert snap.send_times == (0, 1)
    assert snap.columns.ravel().tolist() == [2, 2]
    assert snap.rank == 1
    assert controllability_matrix(p, [1], 0).rank == 0
    with pytest.raises(ConfigurationError):
        controllability_matrix(p, [0], -1)


def test_constant_delay_zero_is_kalman():
    p = SwitchedDelayPlant([[0, 1], [1, 1]], [[0], [1]], (0,))
    snap = controllability_matrix(p, [0, 0], 1)
    assert snap.rank == linalg.rank(linalg.kalman_matrix(p.A, p.B)) == 2


def test_rank_history_exact_matches_float():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = rng.integers(-2, 3, (3, 3))
        b = rng.integers(-2, 3, (3, 1))
        pe = SwitchedDelayPlant(A.tolist(), b.tolist(), (0, 1, 3), 0, linalg.RATIONAL, strict=False)
        pf = SwitchedDelayPlant(A.astype(float), b.astype(float), (0, 1, 3), 0, linalg.FLOAT, strict=False)
        sig = RandomSignal((0, 1, 3), int(rng.integers(1000)))
        re = rank_history(pe, sig, 12)
        rf = rank_history(pf, sig, 12)
        assert (re == rf).all()
        for t in (0, 5, 12):
            assert controllability_matrix(pe, sig, t).rank == re[t]


def test_multi_input_rejected():
    p = SwitchedDelayPlant([[1, 0], [0, 1]], [[1, 0], [0, 1]], (0, 1))
    with pytest.raises(UnsupportedInstanceError):
        decide(p)
    with pytest.raises(UnsupportedInstanceError):
        controllability_matrix(p, [0], 0)


# --------------------------------------------------------------------------
# regular case
# --------------------------------------------------------------------------


def test_example1_rank_and_verdict():
    p = example1_plant()
    assert (rank_history(p, example1_signal(), 50) == 1).all()
    v = decide(p)
    assert v.outcome == UNCONTROLLABLE
    assert v.steps_bound == 15
    assert witness_keeps_rank_deficient(p, v.witness, 3 * v.steps_bound)
    # the alternating word from either phase is the only kind of survivor
    assert set(v.witness.period) == {0, 1} and len(v.witness.period) == 2


def test_example1_literal_state_claim_depends_on_phase():
    # the word 1,0,1,0,... leaves x_1 untouched at even t; starting with 0 does not
    p = example1_plant()
    vals = {t: [F(t + 1)] for t in range(21)}
    tr = simulate(p, OpenLoopController(vals), PeriodicSignal((1, 0)), [1, 0], 20)
    assert all(tr.states[t][0] == 2**t for t in range(0, 21, 2))
    tr = simulate(p, OpenLoopController(vals), example1_signal(), [1, 0], 20)
    assert any(tr.states[t][0] != 2**t for t in range(0, 21, 2))


def test_algorithm1_needs_regular_a():
    p = SwitchedDelayPlant([[0, 1], [0, 0]], [[0], [1]], (0, 1))
    with pytest.raises(SingularMatrixError):
        algorithm1(p)


def test_eigenvector_input_is_uncontrollable():
    # b = (1, 1) is an eigenvector of [[0, 2], [2, 0]]
    p = SwitchedDelayPlant([[0, 2], [2, 0]], [[1], [1]], (0, 1), strict=False)
    v = decide(p)
    assert v.controllable == _oracle(p)
    assert v.outcome == UNCONTROLLABLE


def test_single_delay_reduces_to_kalman():
    p = SwitchedDelayPlant([[1, 1], [0, 1]], [[0], [1]], (2,))
    assert decide(p).controllable
    assert _oracle(p)


@settings(max_examples=80)
@given(small_plants(regular=True))
def test_algorithm1_agrees_with_dfs(plant):
    if not linalg.is_controllable_pair(plant.A, plant.B):
        return
    res = algorithm1(plant)
    assert res.verdict.controllable == _oracle(plant)
    if not res.verdict.controllable:
        assert witness_keeps_rank_deficient(plant, res.verdict.witness, _witness_horizon(plant))


@settings(max_examples=80)
@given(small_plants())
def test_decide_agrees_with_dfs(plant):
    v = decide(plant)
    assert v.controllable == _oracle(plant)
    if not v.controllable:
        assert v.witness is not None
        assert witness_keeps_rank_deficient(plant, v.witness, _witness_horizon(plant))


@settings(max_examples=40)
@given(small_plants(regular=True))
def test_search_graph_subspaces_grow(plant):
    if not linalg.is_controllable_pair(plant.A, plant.B):
        return
    g = algorithm1(plant).graph
    for key, succ in g.edges.items():
        R = g.nodes[key]
        AR = R.image(plant.A)
        for d, child in succ.items():
            if child is None:
                continue
            C = g.nodes[child]
            assert C.dim >= R.dim
            # the child contains A R: no committed direction is ever lost
            for v in AR.basis:
                assert C.contains(v)
    # every child is a proper subspace, so a path grows strictly at most n - 1 times
    assert all(s.dim < plant.n for k, s in g.nodes.items() if k != g.root)


def test_witness_normalization():
    w = Witness.normalized((0, 1), (0, 1))
    assert w.preperiod == () and w.period == (0, 1)
    assert Witness.normalized((), (1, 1, 1)).period == (1,)
    assert [w.value(t) for t in range(4)] == [0, 1, 0, 1]
    with pytest.raises(ConfigurationError):
        Witness((), ())


# --------------------------------------------------------------------------
# singular case
# --------------------------------------------------------------------------


def test_fitting_split_single_block():
    # J_{0,2} (+) [2] with b = (0, 1, 1)
    p = SwitchedDelayPlant([[0, 1, 0], [0, 0, 0], [0, 0, 2]], [[0], [1], [1]], (0, 1))
    s = fitting_split(p)
    assert s.k == 2 and not s.multiple_zero_blocks
    J, b0, k = s.nilpotent
    assert J.tolist() == [[0, 1], [0, 0]]
    assert b0[-1] != 0
    Ar, br = s.regular
    assert Ar.tolist() == [[2]]
    # T A T^-1 is block diagonal
    P = linalg.solve(s.T, linalg.eye(3, True))
    M = s.T @ p.A @ P
    assert all(M[i, j] == 0 for i in range(2) for j in range(2, 3))
    assert all(M[i, j] == 0 for i in range(2, 3) for j in range(2))


def test_fitting_split_regular_and_two_blocks():
    assert fitting_split(SwitchedDelayPlant([[2]], [[1]], (0, 1))).k == 0
    z = SwitchedDelayPlant([[0, 0], [0, 0]], [[1], [1]], (0, 1), strict=False)
    assert fitting_split(z).multiple_zero_blocks
    assert not decide(z).controllable


def test_nilpotent_examples():
    assert classify_nilpotent(1, (0, 5)).controllable
    assert classify_nilpotent(3, (2,)).controllable
    v = classify_nilpotent(2, (0, 2))
    assert v.controllable and v.min_lookahead == 2
    assert not classify_nilpotent(2, (0, 1)).controllable
    assert not classify_nilpotent(2, (0, 2, 4)).controllable
    assert not classify_nilpotent(3, (0, 2)).controllable
    with pytest.raises(ConfigurationError):
        classify_nilpotent(0, (0,))
    with pytest.raises(ConfigurationError):
        classify_nilpotent(2, (0, 1), b0=[1, 0])


def test_nilpotent_plant_through_decide():
    p = SwitchedDelayPlant([[0, 1], [0, 0]], [[0], [1]], (0, 2))
    v = decide(p)
    assert v.controllable and v.min_lookahead == 2
    assert _oracle(p)


def _nilpotent_cases():
    for k in range(1, 5):
        for r in range(1, 5):
            for D in itertools.combinations(range(7), r):
                yield k, D


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_classifier_matches_oracle(k):
    for kk, D in _nilpotent_cases():
        if kk != k:
            continue
        v = classify_nilpotent(k, D)
        assert v.outcome == nilpotent_oracle(k, D), (k, D)
        if not v.controllable:
            tau = actuation_times(v.witness.signal(D), 40 * (max(D) + k))
            run = 0
            for bit in tau[max(D) :]:
                run = run + 1 if bit else 0
                assert run < k, (k, D)


def test_nilpotent_oracle_horizon_mode():
    assert nilpotent_oracle(2, (0, 1), horizon=50) == UNCONTROLLABLE
    assert nilpotent_oracle(2, (0, 2), horizon=50) == CONTROLLABLE


def test_nilpotent_witness_through_plant():
    # J_{0,3}, D = {0, 2}: the witness keeps C_t rank deficient
    p = SwitchedDelayPlant([[0, 1, 0], [0, 0, 1], [0, 0, 0]], [[0], [0], [1]], (0, 2))
    v = decide(p)
    assert not v.controllable
    assert witness_keeps_rank_deficient(p, v.witness, 200)


# --------------------------------------------------------------------------
# block-cyclic test
# --------------------------------------------------------------------------


def test_block_cyclic_swap():
    # A swaps two coordinates; b lives on one of them; D = {0, 1} covers both residues
    p = SwitchedDelayPlant([[0, 1], [1, 0]], [[1], [0]], (0, 1))
    r = block_cyclic_test(p)
    assert r.outcome == UNCONTROLLABLE
    assert witness_keeps_rank_deficient(p, r.witness, 100)
    assert not decide(p).controllable


def test_block_cyclic_inconclusive_when_residues_uncovered():
    p = SwitchedDelayPlant([[0, 1], [1, 0]], [[1], [0]], (0, 2))
    r = block_cyclic_test(p)
    assert r.outcome != UNCONTROLLABLE
    assert decide(p).controllable == _oracle(p)


def test_block_cyclic_rejects_wrong_structure():
    p = SwitchedDelayPlant([[1, 1], [0, 1]], [[0], [1]], (0, 1))
    with pytest.raises(ConfigurationError):
        block_cyclic_test(p, BlockCyclicStructure(2, ((0,), (1,))))


@settings(max_examples=60)
@given(st.integers(2, 4), st.sets(st.integers(0, 5), min_size=1, max_size=3), st.data())
def test_block_cyclic_is_sound(p_, D, data):
    # weighted cyclic shift on p_ coordinates
    w = [data.draw(st.sampled_from([1, 2, -1, 3])) for _ in range(p_)]
    A = [[0] * p_ for _ in range(p_)]
    for i in range(p_):
        A[(i + 1) % p_][i] = w[i]
    b = [data.draw(st.sampled_from([0, 1])) for _ in range(p_)]
    if not any(b):
        b[0] = 1
    plant = SwitchedDelayPlant(A, [[x] for x in b], tuple(D), strict=False)
    r = block_cyclic_test(plant)
    if r.outcome == UNCONTROLLABLE:
        assert witness_keeps_rank_deficient(plant, r.witness, 60)
        assert not _oracle(plant)


# --------------------------------------------------------------------------
# Example 2 instances
# --------------------------------------------------------------------------


def test_example2_modular_variant_keeps_rank_low():
    p = example2_plant("printed")
    ranks = rank_history(p, example2_signal(120, 121), 300, 1e-8)
    assert ranks.max() < 4
