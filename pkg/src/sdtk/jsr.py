"""Joint spectral radius bounds and stability decisions under arbitrary switching.

The bounds come from a Gripenberg-style branch-and-bound over matrix products.
At depth ``k`` every surviving product ``P`` gives the lower bound
``rho(P)**(1/k)``, and its score (the smallest ``||Q||**(1/len Q)`` over its
prefixes ``Q``) is an upper bound for every infinite word that starts with
``P``.  Products whose score cannot beat the current lower bound plus the
tolerance are pruned.  The search stops when the gap closes or the budget runs
out.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from . import _kernels
from .errors import ConfigurationError
from .model import MatrixSet

DEFAULT_DEPTH = 20
DEFAULT_NODES = 10**6
_CHUNK = 4096
_PRECOND_PRODUCTS = 4096
_PRECOND_MAX_LEN = 8


class Outcome(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    UNDETERMINED = "Undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class JsrBounds:
    """Certified bracket ``lower <= JSR <= upper``.

    ``certificate`` is the label word of the product that attains ``lower``;
    ``upper_depth`` is the level whose surviving scores gave ``upper``.
    ``budget_exhausted`` is set when the depth or node limit stopped the search
    before the gap closed.
    """

    lower: float
    upper: float
    epsilon: float
    explored_depth: int
    certificate: tuple
    upper_depth: int = 1
    nodes: int = 0
    converged: bool = True
    budget_exhausted: bool = False
    preconditioned: bool = False

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class StabilityVerdict:
    outcome: Outcome
    bounds: JsrBounds
    witness_product: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "lower": self.bounds.lower,
            "upper": self.bounds.upper,
            "witness_product": [list(w) if isinstance(w, tuple) else w for w in self.witness_product],
            "epsilon": self.bounds.epsilon,
            "explored_depth": self.bounds.explored_depth,
            "budget_exhausted": self.bounds.budget_exhausted,
        }


def _as_set(mset) -> MatrixSet:
    if isinstance(mset, MatrixSet):
        return mset
    return MatrixSet.of(list(mset))


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus (LAPACK eigenvalues of the float matrix)."""
    from .linalg import to_float

    A = to_float(M)
    return float(_kernels.spectral_radii(A[None, :, :])[0])


def _preconditioner(stack: np.ndarray) -> np.ndarray | None:
    """Upper-triangular ``T`` such that ``T M T^-1`` is close to extremal.

    ``T`` is the Cholesky factor of ``I + sum_w (M_w / s^|w|)^T (M_w / s^|w|)``
    over all words up to a length chosen so that at most ~4096 products are
    formed, with ``s`` an estimate of the joint spectral radius.
    """
    r, d = stack.shape[0], stack.shape[1]
    norms = _kernels.spectral_norms(stack)
    scale = max(float(_kernels.spectral_radii(stack).max()), 1e-3 * float(norms.max()))
    if not np.isfinite(scale) or scale <= 0.0:
        return None
    length = 1
    while length < _PRECOND_MAX_LEN and r ** (length + 1) <= _PRECOND_PRODUCTS:
        length += 1
    Q = np.eye(d)
    level = np.eye(d)[None, :, :]
    scaled = stack / scale
    for _ in range(length):
        level = np.matmul(level[:, None, :, :], scaled[None, :, :, :]).reshape(-1, d, d)
        Q = Q + np.einsum("kij,kil->jl", level, level)
    if not np.all(np.isfinite(Q)):
        return None
    Q = 0.5 * (Q + Q.T) / np.linalg.norm(Q, 2)
    try:
        T = np.linalg.cholesky(Q).T
    except np.linalg.LinAlgError:
        return None
    if np.linalg.cond(T) > 1e8:
        return None
    return T


def _expand(frontier, members, scores, length, workers):
    chunks = [slice(i, min(i + _CHUNK, len(frontier))) for i in range(0, len(frontier), _CHUNK)]

    def run(sl):
        return _kernels.expand_level(frontier[sl], members, scores[sl], length)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(sl) for sl in chunks]
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )


def jsr_bounds(
    mset,
    epsilon: float = 1e-2,
    *,
    max_depth: int = DEFAULT_DEPTH,
    max_nodes: int = DEFAULT_NODES,
    workers: int = 1,
    precondition: bool = True,
) -> JsrBounds:
    """Bracket the joint spectral radius to relative accuracy ``epsilon``.

    Parameters
    ----------
    mset : MatrixSet or sequence of square matrices
    epsilon : float
        Target gap, measured relative to ``max(1, lower)``.
    max_depth, max_nodes : int
        Longest product length and total number of products to form.
    workers : int
        Threads used to expand each level.  Levels are split into fixed chunks
        and merged in order, so the result does not depend on this value.
    precondition : bool
        Run the search on ``T M T^-1`` for a data-driven ``T`` (see
        :func:`_preconditioner`).  Similarity leaves the joint spectral radius
        unchanged but usually tightens the norm bounds by orders of magnitude.

    Returns
    -------
    JsrBounds
        On exhaustion of the budget the bracket is still valid but wider than
        requested and ``budget_exhausted`` is set.
    """
    if not epsilon > 0:
        raise ConfigurationError("epsilon must be positive")
    if max_depth < 1 or max_nodes < 1:
        raise ConfigurationError("depth and node budgets must be positive")
    mset = _as_set(mset)
    stack = mset.as_float()
    r = stack.shape[0]
    if not np.all(np.isfinite(stack)):
        raise ConfigurationError("matrices must have finite entries")

    if r == 1:
        rho = float(_kernels.spectral_radii(stack)[0])
        return JsrBounds(rho, rho, epsilon, 1, (mset.labels[0],), 1, 1)

    T = _preconditioner(stack) if precondition else None
    if T is not None:
        work = np.ascontiguousarray(np.stack([T @ M for M in stack]) @ np.linalg.inv(T)[None, :, :])
    else:
        work = stack

    norms = _kernels.spectral_norms(work)
    radii = _kernels.spectral_radii(stack)
    best = int(np.argmax(radii))
    lower = float(radii[best])
    cert = (best,)
    upper = float(norms.max())
    upper_depth = 1
    nodes = r
    delta = epsilon * max(1.0, lower)
    keep = np.nonzero(norms > lower + delta)[0]
    frontier = work[keep]
    scores = norms[keep]
    history = [keep]  # indices (into each level's children) of kept products
    depth = 1
    exhausted = False
    while len(frontier) and upper - lower > delta:
        if depth >= max_depth or nodes + len(frontier) * r > max_nodes:
            exhausted = True
            break
        depth += 1
        children, cscores, cradii = _expand(frontier, work, scores, depth, workers)
        nodes += len(children)
        i = int(np.argmax(cradii))
        if cradii[i] > lower:
            # rescore on the original matrices: similarity moves defective eigenvalues by ~sqrt(eps)
            word = _reconstruct(history, i, r)
            P = stack[word[0]]
            for j in word[1:]:
                P = P @ stack[j]
            rho = float(_kernels.spectral_radii(P[None, :, :])[0]) ** (1.0 / len(word))
            if rho > lower:
                lower, cert = rho, word
        delta = epsilon * max(1.0, lower)
        theta = lower + delta
        keep = np.nonzero(cscores > theta)[0]
        level_bound = max(theta, float(cscores[keep].max())) if len(keep) else theta
        if level_bound < upper:
            upper = level_bound
            upper_depth = depth
        frontier = children[keep]
        scores = cscores[keep]
        history.append(keep)
    upper = max(upper, lower)
    converged = not exhausted
    return JsrBounds(
        lower,
        upper,
        epsilon,
        depth,
        tuple(mset.labels[j] for j in cert),
        upper_depth,
        nodes,
        converged,
        exhausted,
        T is not None,
    )


def _reconstruct(history, child_index: int, r: int) -> tuple[int, ...]:
    """Member indices of the ``child_index``-th product of the level after ``history``."""
    word = []
    idx = child_index
    for level in range(len(history), 0, -1):
        parent, member = divmod(idx, r)
        word.append(member)
        idx = int(history[level - 1][parent])
    word.append(idx)
    return tuple(reversed(word))


def product(mset, word: Sequence) -> np.ndarray:
    """``M_{w0} M_{w1} ... M_{wk}`` in float, for labels ``word``."""
    mset = _as_set(mset)
    from .linalg import to_float

    out = np.eye(mset.dim)
    for lab in word:
        out = out @ to_float(mset[lab])
    return out


def is_stable(
    mset,
    epsilon: float = 1e-2,
    *,
    max_depth: int = DEFAULT_DEPTH,
    max_nodes: int = DEFAULT_NODES,
    workers: int = 1,
    slack: float = 1e-10,
    precondition: bool = True,
) -> StabilityVerdict:
    """Decide whether every switching sequence drives the state to zero.

    A member with spectral radius at least ``1 - slack`` is reported Unstable
    without a search.  Otherwise the verdict is Stable when ``upper < 1``,
    Unstable when ``lower >= 1 - slack`` and Undetermined in between.
    """
    mset = _as_set(mset)
    stack = mset.as_float()
    radii = _kernels.spectral_radii(stack)
    i = int(np.argmax(radii))
    if radii[i] >= 1.0 - slack:
        upper = max(float(_kernels.spectral_norms(stack).max()), float(radii[i]))
        b = JsrBounds(float(radii[i]), upper, epsilon, 1, (mset.labels[i],), 1, len(mset), False, False)
        return StabilityVerdict(Outcome.UNSTABLE, b, b.certificate)
    b = jsr_bounds(
        mset, epsilon, max_depth=max_depth, max_nodes=max_nodes, workers=workers, precondition=precondition
    )
    if b.lower >= 1.0 - slack:
        return StabilityVerdict(Outcome.UNSTABLE, b, b.certificate)
    if b.upper < 1.0:
        return StabilityVerdict(Outcome.STABLE, b, b.certificate)
    return StabilityVerdict(Outcome.UNDETERMINED, b, b.certificate)


def linear_rate_floor() -> float:
    """Real root of ``r**3 + r**2 - 1``: no linear law for the rotation plant decays faster."""
    return float(bisect(lambda r: r**3 + r**2 - 1.0, 0.5, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))
