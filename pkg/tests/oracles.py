"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math
import sys
from fractions import Fraction

import numpy as np


def _rref_rows(rows, n):
    """Canonical row-echelon basis of ``rows`` (tuples of Fractions)."""
    M = [list(r) for r in rows]
    out = []
    col = 0
    r = 0
    while r < len(M) and col < n:
        piv = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][col]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * c for a, c in zip(M[i], M[r])]
        r += 1
        col += 1
    return tuple(tuple(row) for row in M[:r])


def dfs_controllable(A, b, delays, depth=None):
    """Plain search over delay sequences tracking ``span C_t`` and in-flight packets.

    State at time ``t`` (before sending): the span of the columns of ``C_{t-1}``
    mapped to time ``t`` and the set of arrival offsets already committed.  A
    sequence survives while the span stays below ``R^n``; the plant counts as
    uncontrollable when some sequence survives ``depth`` steps (default
    ``N* + d_max``).
    """
    A = [[Fraction(x) for x in row] for row in A]
    b = tuple(Fraction(x) for x in b)
    n = len(b)
    D = sorted(delays)
    dm = D[-1]
    if depth is None:
        depth = math.comb(n + 2 * len(D), 2 * len(D)) + dm

    def mul(rows):
        return [tuple(sum(A[i][j] * v[j] for j in range(n)) for i in range(n)) for v in rows]

    dead_at = {}  # state -> largest remaining depth proven dead... stored as minimal depth proven dead
    alive_at = {}

    def survive(span, pending, remaining):
        if remaining == 0:
            return True
        key = (span, pending)
        if key in alive_at and alive_at[key] >= remaining:
            return True
        if key in dead_at and dead_at[key] <= remaining:
            return False
        for d in D:
            pend = set(pending) | {d}
            rows = list(span)
            if 0 in pend:
                rows.append(b)
            basis = _rref_rows(rows, n)
            if len(basis) == n:
                continue
            nxt_span = _rref_rows(mul(basis), n)
            nxt_pend = frozenset(p - 1 for p in pend if p > 0)
            if survive(nxt_span, nxt_pend, remaining - 1):
                alive_at[key] = max(alive_at.get(key, 0), remaining)
                return True
        dead_at[key] = min(dead_at.get(key, remaining), remaining)
        return False

    need = 4 * depth + 100
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)
    return not survive((), frozenset(), depth)


def brute_products(members, length):
    """All products of exactly ``length`` members, with their index words."""
    for word in itertools.product(range(len(members)), repeat=length):
        P = np.eye(members[0].shape[0])
        for i in word:
            P = P @ members[i]
        yield word, P


def all_simple_path_delays(nodes, edges, source, target):
    """Path delays via networkx's simple-edge-path enumeration."""
    import networkx as nx

    g = nx.MultiDiGraph()
    g.add_nodes_from(nodes)
    for k, (u, v, d) in enumerate(edges):
        g.add_edge(u, v, key=k, delay=d)
    if source == target:
        return {0}
    out = set()
    for path in nx.all_simple_edge_paths(g, source, target):
        out.add(sum(g.edges[u, v, k]["delay"] for u, v, k in path))
    return out
