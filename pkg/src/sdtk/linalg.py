"""Dense linear algebra over two number systems.

Matrices are numpy arrays.  ``dtype=object`` arrays hold :class:`fractions.Fraction`
entries and every decision (rank, membership, solve) is exact.  ``float64``
arrays use SVD/QR with an explicit relative tolerance.  Functions dispatch on
the dtype, so callers never branch on the arithmetic mode themselves.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ConfigurationError, SingularMatrixError

RATIONAL = "rational"
FLOAT = "float"


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def _to_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (bool, np.bool_)):
        return Fraction(int(v))
    if isinstance(v, (int, np.integer, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, (float, np.floating)):
        # shortest decimal repr, so 0.4 becomes 2/5 rather than its binary expansion
        return Fraction(repr(float(v)))
    raise ConfigurationError(f"cannot interpret {v!r} as a rational number")


def is_rational_value(v) -> bool:
    return isinstance(v, (Fraction, int, np.integer, Rational, str)) and not isinstance(v, bool)


def detect_arithmetic(*arrays) -> str:
    """``rational`` when every entry is an int/Fraction/rational string, else ``float``."""
    for arr in arrays:
        a = np.asarray(arr, dtype=object)
        for v in a.ravel():
            if not is_rational_value(v):
                return FLOAT
    return RATIONAL


def as_matrix(data, arithmetic: str, *, ndim: int = 2) -> np.ndarray:
    """Convert nested sequences to an exact (object) or float64 array."""
    if arithmetic == RATIONAL:
        raw = np.asarray(data, dtype=object)
        out = np.empty(raw.shape, dtype=object)
        for idx, v in np.ndenumerate(raw):
            out[idx] = _to_fraction(v)
    elif arithmetic == FLOAT:
        raw = np.asarray(data, dtype=object)
        out = np.empty(raw.shape, dtype=np.float64)
        for idx, v in np.ndenumerate(raw):
            out[idx] = float(Fraction(v)) if isinstance(v, str) else float(v)
    else:
        raise ConfigurationError(f"unknown arithmetic mode {arithmetic!r}")
    if out.ndim != ndim:
        raise ConfigurationError(f"expected a {ndim}-d array, got shape {out.shape}")
    return out


def to_float(M) -> np.ndarray:
    if is_exact(M):
        return np.vectorize(float, otypes=[np.float64])(M) if M.size else np.zeros(M.shape)
    return np.asarray(M, dtype=np.float64)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def eye(n: int, exact: bool) -> np.ndarray:
    out = zeros((n, n), exact)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def default_rtol(shape) -> float:
    return max(shape) * np.finfo(float).eps if len(shape) else np.finfo(float).eps


# --------------------------------------------------------------------------
# exact row reduction
# --------------------------------------------------------------------------


def rref_exact(M):
    """Reduced row echelon form over the rationals.  Returns ``(R, pivots)``."""
    R = [list(row) for row in M]
    rows = len(R)
    cols = len(R[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = 1 / Fraction(R[r][c])
        R[r] = [v * inv for v in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = R[i][j]
    return out, tuple(pivots)


def rank(M, rtol: float | None = None) -> int:
    """Rank; exact for rational arrays, SVD threshold ``rtol * sigma_max`` otherwise."""
    M = np.asarray(M) if not is_exact(M) else M
    if M.size == 0:
        return 0
    if is_exact(M):
        return len(rref_exact(M)[1])
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s[0] == 0.0:
        return 0
    tol = default_rtol(M.shape) if rtol is None else rtol
    return int(np.count_nonzero(s > tol * s[0]))


def solve(A, b):
    """Solve ``A x = b`` for square nonsingular ``A``."""
    if is_exact(A):
        n = A.shape[0]
        bb = b.reshape(n, -1)
        aug = np.concatenate([A, bb], axis=1)
        R, piv = rref_exact(aug)
        if piv[:n] != tuple(range(n)) or (len(piv) > n):
            raise SingularMatrixError("matrix is singular")
        x = R[:, n:]
        return x.reshape(b.shape)
    try:
        return np.linalg.solve(np.asarray(A, float), np.asarray(b, float))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


def is_invertible(A, rtol: float | None = None) -> bool:
    return rank(A, rtol) == A.shape[0]


def min_norm_solve(C, y):
    """Minimum-norm solution of ``C v = y``; ``C`` must have full row rank."""
    if is_exact(C):
        G = C @ C.T
        z = solve(G, y)
        return C.T @ z
    v, *_ = np.linalg.lstsq(np.asarray(C, float), np.asarray(y, float), rcond=None)
    return v


def nullspace(M, rtol: float | None = None) -> np.ndarray:
    """Basis of ``{x : M x = 0}`` as columns."""
    n = M.shape[1]
    if is_exact(M):
        R, piv = rref_exact(M)
        free = [j for j in range(n) if j not in piv]
        basis = zeros((n, len(free)), True)
        for k, f in enumerate(free):
            basis[f, k] = Fraction(1)
            for i, p in enumerate(piv):
                basis[p, k] = -R[i, f]
        return basis
    u, s, vh = np.linalg.svd(np.asarray(M, float))
    tol = (default_rtol(M.shape) if rtol is None else rtol) * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > tol)) if s.size else 0
    return vh[r:].T.copy()


def column_space(M, rtol: float | None = None) -> np.ndarray:
    """Canonical basis of the column space as columns (RREF rows of ``M.T`` when exact)."""
    if is_exact(M):
        R, piv = rref_exact(M.T)
        return R[: len(piv)].T.copy()
    u, s, vh = np.linalg.svd(np.asarray(M, float))
    tol = (default_rtol(M.shape) if rtol is None else rtol) * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > tol)) if s.size else 0
    return u[:, :r].copy()


def matrix_power(A, k: int):
    if is_exact(A):
        out = eye(A.shape[0], True)
        base = A
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out
    return np.linalg.matrix_power(np.asarray(A, float), k)


def kalman_matrix(A, B):
    """``[B, AB, ..., A^{n-1} B]``."""
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.concatenate(blocks, axis=1)


def is_controllable_pair(A, B, rtol: float | None = None) -> bool:
    return rank(kalman_matrix(A, B), rtol) == A.shape[0]


# --------------------------------------------------------------------------
# subspaces
# --------------------------------------------------------------------------


class Subspace:
    """Immutable linear subspace of R^n with a canonical basis.

    Exact subspaces keep their RREF basis (so equal subspaces have equal keys);
    float subspaces keep an orthonormal basis and key on the rounded projector.
    """

    __slots__ = ("ambient", "basis", "exact", "rtol", "_key")

    def __init__(self, ambient: int, basis, exact: bool, rtol: float = 1e-9):
        self.ambient = ambient
        self.exact = exact
        self.rtol = rtol
        self.basis = basis  # rows
        self._key = None

    @classmethod
    def span(cls, vectors, ambient: int, exact: bool, rtol: float = 1e-9) -> "Subspace":
        if exact:
            vecs = [as_matrix(np.asarray(v, dtype=object).reshape(-1), RATIONAL, ndim=1) for v in vectors]
        else:
            vecs = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
        if not vecs:
            return cls(ambient, zeros((0, ambient), exact), exact, rtol)
        if exact:
            M = np.stack(vecs, axis=0)
            R, piv = rref_exact(M)
            return cls(ambient, R[: len(piv)].copy(), True, rtol)
        M = np.stack([np.asarray(v, float) for v in vecs], axis=0)
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        r = int(np.count_nonzero(s > rtol * s[0])) if s.size and s[0] > 0 else 0
        return cls(ambient, vh[:r].copy(), False, rtol)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient

    def contains(self, v) -> bool:
        v = v.reshape(-1)
        if self.exact:
            rem = list(v)
            for row in self.basis:
                p = next(j for j, x in enumerate(row) if x != 0)
                f = rem[p]
                if f != 0:
                    rem = [a - f * b for a, b in zip(rem, row)]
            return all(x == 0 for x in rem)
        v = np.asarray(v, float)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return True
        if self.dim == 0:
            return False
        res = v - self.basis.T @ (self.basis @ v)
        return np.linalg.norm(res) <= self.rtol * nv

    def extended(self, v) -> "Subspace":
        if self.contains(v):
            return self
        rows = [row for row in self.basis] + [v.reshape(-1)]
        return Subspace.span(rows, self.ambient, self.exact, self.rtol)

    def image(self, M) -> "Subspace":
        if self.dim == 0:
            return self
        rows = (M @ self.basis.T).T
        return Subspace.span(list(rows), self.ambient, self.exact, self.rtol)

    @property
    def key(self):
        if self._key is None:
            if self.exact:
                self._key = (self.dim, tuple(self.basis.ravel()))
            else:
                proj = self.basis.T @ self.basis
                self._key = (self.dim, (np.round(proj, 8) + 0.0).tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient}, exact={self.exact})"
