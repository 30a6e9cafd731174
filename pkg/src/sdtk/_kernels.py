"""Hot numeric loops, with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``SDTK_DISABLE_NUMBA=1`` to
force the numpy path.  With numba available, the element-wise loops
(``arrival_mask``, ``iterate``) run jitted while the kernels dominated by small
LAPACK calls keep numpy's batched versions, which measure faster (see
``benchmarks/bench_kernels.py``); ``SDTK_NUMBA_ALL=1`` routes those through
numba as well.  Both implementations are always importable as
``numpy_<name>`` and ``numba_<name>`` so they can be checked against each other.
"""

from __future__ import annotations

import os

import numpy as np

def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


_DISABLED = _flag("SDTK_DISABLE_NUMBA")
_ALL_NUMBA = _flag("SDTK_NUMBA_ALL")

try:
    if _DISABLED:
        raise ImportError("numba disabled by SDTK_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

BACKEND = ("numba-all" if _ALL_NUMBA else "numba") if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def numpy_spectral_radii(stack):
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    if stack.shape[0] == 0:
        return np.zeros(0)
    return np.abs(np.linalg.eigvals(stack)).max(axis=1)


def numpy_spectral_norms(stack):
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    if stack.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.norm(stack, ord=2, axis=(1, 2))


def numpy_expand_level(parents, members, parent_scores, length):
    """Children ``P @ M`` of every parent, with their scores and root radii.

    Children are ordered parent-major: child ``i * r + j`` is
    ``parents[i] @ members[j]``.  The score of a child is the running minimum of
    ``||prefix||**(1/len(prefix))`` over its prefixes; the radius is
    ``rho(child)**(1/length)``.
    """
    r = members.shape[0]
    d = members.shape[1]
    children = np.matmul(parents[:, None, :, :], members[None, :, :, :]).reshape(-1, d, d)
    inv = 1.0 / length
    norms = numpy_spectral_norms(children) ** inv
    scores = np.minimum(np.repeat(parent_scores, r), norms)
    radii = numpy_spectral_radii(children) ** inv
    return children, scores, radii


def numpy_arrival_mask(arrivals, horizon):
    tau = np.zeros(horizon + 1, dtype=np.int8)
    arrivals = np.asarray(arrivals, dtype=np.int64)
    hits = arrivals[arrivals <= horizon]
    tau[hits] = 1
    return tau


def numpy_iterate(members, index_sequence, w0):
    members = np.asarray(members, dtype=np.float64)
    out = np.empty((len(index_sequence) + 1, members.shape[1]))
    out[0] = w0
    for t, i in enumerate(index_sequence):
        out[t + 1] = members[i] @ out[t]
    return out


def _rotation_stacks(alpha, k1, k2):
    c, s = np.cos(alpha), np.sin(alpha)
    g1, g2 = np.meshgrid(k1, k2, indexing="ij")
    g1 = g1.ravel()
    g2 = g2.ravel()
    count = g1.size
    a0 = np.zeros((count, 3, 3))
    a0[:, 0, 0] = c + g1
    a0[:, 0, 1] = -s + g2
    a0[:, 0, 2] = 1.0
    a0[:, 1, 0] = s
    a0[:, 1, 1] = c
    a1 = np.zeros((count, 3, 3))
    a1[:, 0, 0] = c
    a1[:, 0, 1] = -s
    a1[:, 0, 2] = 1.0
    a1[:, 1, 0] = s
    a1[:, 1, 1] = c
    a1[:, 2, 0] = g1
    a1[:, 2, 1] = g2
    return a0, a1


def numpy_rotation_grid_radii(alpha, k1, k2):
    """``max(rho(A_0), rho(A_1))`` on the ``len(k1) x len(k2)`` gain grid."""
    a0, a1 = _rotation_stacks(alpha, np.asarray(k1, float), np.asarray(k2, float))
    out = np.maximum(numpy_spectral_radii(a0), numpy_spectral_radii(a1))
    return out.reshape(len(k1), len(k2))


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _rho(m):
        ev = np.linalg.eigvals(m.astype(np.complex128))
        best = 0.0
        for z in ev:
            a = abs(z)
            if a > best:
                best = a
        return best

    @numba.njit(cache=True, nogil=True)
    def _norm2(m):
        _, s, _ = np.linalg.svd(m, full_matrices=False)
        return s[0] if s.size else 0.0

    @numba.njit(cache=True, nogil=True)
    def _spectral_radii_nb(stack):
        out = np.empty(stack.shape[0])
        for i in range(stack.shape[0]):
            out[i] = _rho(stack[i])
        return out

    @numba.njit(cache=True, nogil=True)
    def _spectral_norms_nb(stack):
        out = np.empty(stack.shape[0])
        for i in range(stack.shape[0]):
            out[i] = _norm2(np.ascontiguousarray(stack[i]))
        return out

    @numba.njit(cache=True, nogil=True)
    def _expand_level_nb(parents, members, parent_scores, length):
        p = parents.shape[0]
        r = members.shape[0]
        d = members.shape[1]
        children = np.empty((p * r, d, d))
        scores = np.empty(p * r)
        radii = np.empty(p * r)
        inv = 1.0 / length
        for i in range(p):
            for j in range(r):
                k = i * r + j
                c = parents[i] @ members[j]
                children[k] = c
                nrm = _norm2(c) ** inv
                scores[k] = min(parent_scores[i], nrm)
                radii[k] = _rho(c) ** inv
        return children, scores, radii

    @numba.njit(cache=True, nogil=True)
    def _arrival_mask_nb(arrivals, horizon):
        tau = np.zeros(horizon + 1, dtype=np.int8)
        for a in arrivals:
            if a <= horizon:
                tau[a] = 1
        return tau

    @numba.njit(cache=True, nogil=True)
    def _iterate_nb(members, index_sequence, w0):
        n = members.shape[1]
        out = np.empty((index_sequence.shape[0] + 1, n))
        out[0] = w0
        for t in range(index_sequence.shape[0]):
            m = members[index_sequence[t]]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += m[i, j] * out[t, j]
                out[t + 1, i] = acc
        return out

    @numba.njit(cache=True, nogil=True)
    def _rotation_grid_nb(alpha, k1, k2):
        c = np.cos(alpha)
        s = np.sin(alpha)
        out = np.empty((k1.shape[0], k2.shape[0]))
        for i in range(k1.shape[0]):
            a0 = np.zeros((3, 3))
            a1 = np.zeros((3, 3))
            for j in range(k2.shape[0]):
                a0[0, 0] = c + k1[i]
                a0[0, 1] = -s + k2[j]
                a0[0, 2] = 1.0
                a0[1, 0] = s
                a0[1, 1] = c
                a1[0, 0] = c
                a1[0, 1] = -s
                a1[0, 2] = 1.0
                a1[1, 0] = s
                a1[1, 1] = c
                a1[2, 0] = k1[i]
                a1[2, 1] = k2[j]
                out[i, j] = max(_rho(a0), _rho(a1))
        return out

    def numba_spectral_radii(stack):
        stack = np.ascontiguousarray(stack, dtype=np.float64)
        return _spectral_radii_nb(stack)

    def numba_spectral_norms(stack):
        stack = np.ascontiguousarray(stack, dtype=np.float64)
        return _spectral_norms_nb(stack)

    def numba_expand_level(parents, members, parent_scores, length):
        return _expand_level_nb(
            np.ascontiguousarray(parents, dtype=np.float64),
            np.ascontiguousarray(members, dtype=np.float64),
            np.ascontiguousarray(parent_scores, dtype=np.float64),
            int(length),
        )

    def numba_arrival_mask(arrivals, horizon):
        return _arrival_mask_nb(np.asarray(arrivals, dtype=np.int64), int(horizon))

    def numba_iterate(members, index_sequence, w0):
        return _iterate_nb(
            np.ascontiguousarray(members, dtype=np.float64),
            np.asarray(index_sequence, dtype=np.int64),
            np.asarray(w0, dtype=np.float64),
        )

    def numba_rotation_grid_radii(alpha, k1, k2):
        return _rotation_grid_nb(
            float(alpha), np.asarray(k1, dtype=np.float64), np.asarray(k2, dtype=np.float64)
        )

    arrival_mask = numba_arrival_mask
    iterate = numba_iterate
    if _ALL_NUMBA:
        spectral_radii = numba_spectral_radii
        spectral_norms = numba_spectral_norms
        expand_level = numba_expand_level
        rotation_grid_radii = numba_rotation_grid_radii
    else:
        # numpy's batched LAPACK gufuncs beat a jitted loop of small LAPACK calls
        spectral_radii = numpy_spectral_radii
        spectral_norms = numpy_spectral_norms
        expand_level = numpy_expand_level
        rotation_grid_radii = numpy_rotation_grid_radii
else:
    spectral_radii = numpy_spectral_radii
    spectral_norms = numpy_spectral_norms
    expand_level = numpy_expand_level
    arrival_mask = numpy_arrival_mask
    iterate = numpy_iterate
    rotation_grid_radii = numpy_rotation_grid_radii
