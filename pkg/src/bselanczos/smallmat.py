"""Self-contained dense factorizations of the small projected matrices.

All routines operate on k x k problems with k up to a few hundred, so O(k^3)
with explicit accumulation of the transforms is acceptable.  Nothing here
calls into LAPACK eigensolvers; the dense reference oracle lives elsewhere
and stays independent of these code paths.

Provided factorizations:

- symmetric tridiagonal eigendecomposition (implicit-shift QL),
- SVD of a positive lower-bidiagonal matrix (implicit-shift Golub-Kahan,
  run on the bidiagonal itself rather than its Gram matrix so the small
  singular values keep full relative accuracy),
- eigendecomposition / SVD of small dense matrices via Householder
  reduction feeding the same two iteration cores (needed after a thick
  restart, where the projected matrix is an arrowhead or a spiked
  triangular matrix rather than a plain band).
"""

import numpy as np

from .errors import FactorizationError

__all__ = [
    "SymTridiag",
    "LowerBidiag",
    "SpectralFactor",
    "tridiag_eig",
    "bidiag_svd",
    "symeig_dense",
    "svd_dense",
    "cholesky_relation_check",
]

_EPS = np.finfo(np.float64).eps
_MAX_SWEEPS = 60


class SymTridiag:
    """Real symmetric tridiagonal matrix stored as its two bands."""

    def __init__(self, diag, offdiag):
        diag = np.asarray(diag, dtype=np.float64)
        offdiag = np.asarray(offdiag, dtype=np.float64)
        if offdiag.size != max(diag.size - 1, 0):
            raise ValueError("offdiag must have len(diag) - 1 entries")
        self.diag = diag
        self.offdiag = offdiag

    @property
    def k(self):
        return self.diag.size

    def toarray(self):
        T = np.diag(self.diag)
        if self.offdiag.size:
            T += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return T


class LowerBidiag:
    """Real lower bidiagonal matrix stored as its two bands."""

    def __init__(self, diag, subdiag):
        diag = np.asarray(diag, dtype=np.float64)
        subdiag = np.asarray(subdiag, dtype=np.float64)
        if subdiag.size != max(diag.size - 1, 0):
            raise ValueError("subdiag must have len(diag) - 1 entries")
        self.diag = diag
        self.subdiag = subdiag

    @property
    def k(self):
        return self.diag.size

    def toarray(self):
        L = np.diag(self.diag)
        if self.subdiag.size:
            L += np.diag(self.subdiag, -1)
        return L


class SpectralFactor:
    """Sorted eigenvalues with the accumulated orthogonal factor."""

    def __init__(self, values, vectors):
        self.values = values
        self.vectors = vectors


def _sort_order(values, order):
    if order == "smallest-first":
        return np.argsort(values, kind="stable")
    if order == "largest-first":
        # stable descending: ties keep original index order
        return np.argsort(-values, kind="stable")
    raise ValueError(f"unknown order {order!r}")


def _ql_implicit(d, e, Q):
    """Implicit-shift QL on tridiagonal (d, e), rotations accumulated into Q.

    d and e are modified in place; e must have length len(d) with a trailing
    scratch slot.  Zero off-diagonal entries split the problem (deflation),
    so a lucky breakdown never raises.
    """
    k = d.size
    for l in range(k):
        sweeps = 0
        while True:
            m = l
            while m < k - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_SWEEPS:
                raise FactorizationError(
                    f"tridiagonal QL failed to converge at index {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                qi = Q[:, i].copy()
                Q[:, i] = c * qi - s * Q[:, i + 1]
                Q[:, i + 1] = s * qi + c * Q[:, i + 1]
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def tridiag_eig(T, order="smallest-first"):
    """Eigendecomposition of a real symmetric tridiagonal matrix.

    Returns a SpectralFactor with values sorted per ``order`` (stable, so
    equal values keep their original index order) and an orthogonal Q with
    T = Q diag(values) Q^T.
    """
    d = T.diag.astype(np.float64).copy()
    e = np.zeros(d.size, dtype=np.float64)
    e[: T.offdiag.size] = T.offdiag
    Q = np.eye(d.size)
    _ql_implicit(d, e, Q)
    idx = _sort_order(d, order)
    return SpectralFactor(d[idx], Q[:, idx])


def _householder_tridiagonalize(A):
    """Reduce a real symmetric matrix to tridiagonal form, A = Q T Q^T."""
    A = np.array(A, dtype=np.float64)
    k = A.shape[0]
    Q = np.eye(k)
    for j in range(k - 2):
        x = A[j + 1:, j]
        if np.linalg.norm(x[1:]) == 0.0:
            continue
        nx = np.linalg.norm(x)
        sigma = np.copysign(nx, x[0]) if x[0] != 0.0 else nx
        v = x.copy()
        v[0] += sigma
        v /= np.linalg.norm(v)
        S = A[j + 1:, j + 1:]
        w = S @ v
        Kv = w - v * (v @ w)
        S -= 2.0 * (np.outer(v, Kv) + np.outer(Kv, v))
        A[j + 1:, j] = A[j, j + 1:] = 0.0
        A[j + 1, j] = A[j, j + 1] = -sigma
        Q[:, j + 1:] -= 2.0 * np.outer(Q[:, j + 1:] @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy()
    return d, e, Q


def symeig_dense(A, order="smallest-first"):
    """Eigendecomposition of a small dense real symmetric matrix.

    Householder reduction to tridiagonal form followed by the implicit-shift
    QL core.  Used for the post-restart projected matrices, which carry an
    arrowhead coupling row/column in addition to the tridiagonal tail.
    """
    A = np.asarray(A, dtype=np.float64)
    k = A.shape[0]
    if k == 0:
        return SpectralFactor(np.zeros(0), np.zeros((0, 0)))
    if k == 1:
        return SpectralFactor(A[0, :1].copy(), np.ones((1, 1)))
    d, e, Q = _householder_tridiagonalize(A)
    ework = np.zeros(k, dtype=np.float64)
    ework[: k - 1] = e
    _ql_implicit(d, ework, Q)
    idx = _sort_order(d, order)
    return SpectralFactor(d[idx], Q[:, idx])


def _gk_implicit(d, ee, U, V):
    """Implicit-shift Golub-Kahan QR on an upper bidiagonal matrix.

    ``d`` holds the diagonal and ``ee`` the padded superdiagonal with
    ``ee[i]`` the entry left-above d[i] (``ee[0]`` is scratch).  Left
    rotations are accumulated into U, right rotations into V, preserving
    B_in = U B V^T.  On return d holds the nonnegative singular values.
    """
    k = d.size
    anorm = max(np.max(np.abs(d)) if k else 0.0,
                np.max(np.abs(ee)) if k else 0.0)
    for kk in range(k - 1, -1, -1):
        for its in range(_MAX_SWEEPS + 1):
            # find the active block [l, kk]; cancel if a diagonal vanished
            cancel = True
            l = kk
            while l >= 0:
                if l == 0 or abs(ee[l]) <= _EPS * (abs(d[l - 1]) + abs(d[l])):
                    cancel = False
                    break
                if abs(d[l - 1]) <= _EPS * anorm:
                    break
                l -= 1
            if cancel:
                # d[l-1] ~ 0: chase ee[l] away with left rotations
                c, s = 0.0, 1.0
                for i in range(l, kk + 1):
                    f = s * ee[i]
                    ee[i] = c * ee[i]
                    if abs(f) <= _EPS * anorm:
                        break
                    g = d[i]
                    h = np.hypot(f, g)
                    d[i] = h
                    c = g / h
                    s = -f / h
                    ucol = U[:, l - 1].copy()
                    U[:, l - 1] = ucol * c + U[:, i] * s
                    U[:, i] = U[:, i] * c - ucol * s
            z = d[kk]
            if l == kk:
                if z < 0.0:
                    d[kk] = -z
                    V[:, kk] = -V[:, kk]
                break
            if its == _MAX_SWEEPS:
                raise FactorizationError("bidiagonal QR failed to converge")
            # Wilkinson-type shift from the trailing 2x2 of B^T B
            x = d[l]
            y = d[kk - 1]
            g = ee[kk - 1]
            h = ee[kk]
            f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y)
            g = np.hypot(f, 1.0)
            f = ((x - z) * (x + z) + h * (y / (f + (g if f >= 0 else -g)) - h)) / x
            # chase the bulge
            c = s = 1.0
            for j in range(l, kk):
                i = j + 1
                g = ee[i]
                y = d[i]
                h = s * g
                g = c * g
                z = np.hypot(f, h)
                ee[j] = z
                c = f / z
                s = h / z
                f = x * c + g * s
                g = g * c - x * s
                h = y * s
                y = y * c
                vcol = V[:, j].copy()
                V[:, j] = vcol * c + V[:, i] * s
                V[:, i] = V[:, i] * c - vcol * s
                z = np.hypot(f, h)
                d[j] = z
                if z != 0.0:
                    c = f / z
                    s = h / z
                f = c * g + s * y
                x = c * y - s * g
                ucol = U[:, j].copy()
                U[:, j] = ucol * c + U[:, i] * s
                U[:, i] = U[:, i] * c - ucol * s
            ee[l] = 0.0
            ee[kk] = f
            d[kk] = x


def _bidiag_qr(d, e, U, V):
    """Run the GK core on diag d, superdiag e (unpadded); in-place on U, V."""
    ee = np.zeros(d.size, dtype=np.float64)
    ee[1:] = e
    _gk_implicit(d, ee, U, V)


def bidiag_svd(L, order="smallest-first"):
    """SVD of a positive lower-bidiagonal matrix, L = Q diag(sigma) P^T.

    The iteration runs on the bidiagonal itself (never on L L^T) so the
    smallest singular values, which are the wanted quantities, retain full
    relative accuracy.  Returns (Q, sigma, P) with sigma sorted per ``order``
    and Q, P real orthogonal.
    """
    k = L.k
    # L^T is upper bidiagonal: GK there, then swap the factors back
    d = L.diag.astype(np.float64).copy()
    e = L.subdiag.astype(np.float64).copy()
    Ut = np.eye(k)
    Vt = np.eye(k)
    _bidiag_qr(d, e, Ut, Vt)
    idx = _sort_order(d, order)
    # L^T = Ut S Vt^T  =>  L = Vt S Ut^T
    return Vt[:, idx], d[idx], Ut[:, idx]


def _householder_bidiagonalize(A):
    """Reduce a real dense square matrix to upper bidiagonal form A = U B V^T."""
    A = np.array(A, dtype=np.float64)
    k = A.shape[0]
    U = np.eye(k)
    V = np.eye(k)
    for j in range(k):
        x = A[j:, j]
        if x.size > 1 and np.linalg.norm(x[1:]) != 0.0:
            nx = np.linalg.norm(x)
            sigma = np.copysign(nx, x[0]) if x[0] != 0.0 else nx
            v = x.copy()
            v[0] += sigma
            v /= np.linalg.norm(v)
            A[j:, j:] -= 2.0 * np.outer(v, v @ A[j:, j:])
            U[:, j:] -= 2.0 * np.outer(U[:, j:] @ v, v)
        if j < k - 2:
            x = A[j, j + 1:]
            if np.linalg.norm(x[1:]) != 0.0:
                nx = np.linalg.norm(x)
                sigma = np.copysign(nx, x[0]) if x[0] != 0.0 else nx
                v = x.copy()
                v[0] += sigma
                v /= np.linalg.norm(v)
                A[j:, j + 1:] -= 2.0 * np.outer(A[j:, j + 1:] @ v, v)
                V[:, j + 1:] -= 2.0 * np.outer(V[:, j + 1:] @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, 1).copy()
    return d, e, U, V


def svd_dense(A, order="smallest-first"):
    """SVD of a small dense real matrix, A = Q diag(sigma) P^T.

    Householder bidiagonalization followed by the Golub-Kahan core.  Used
    for the post-restart projected matrix of the bidiagonal-form solver,
    which is a spiked triangular matrix rather than a plain bidiagonal.
    """
    A = np.asarray(A, dtype=np.float64)
    k = A.shape[0]
    if k == 0:
        return np.zeros((0, 0)), np.zeros(0), np.zeros((0, 0))
    d, e, U, V = _householder_bidiagonalize(A)
    _bidiag_qr(d, e, U, V)
    idx = _sort_order(d, order)
    return U[:, idx], d[idx], V[:, idx]


def cholesky_relation_check(T, L):
    """Return max |T - L L^T| entry; zero when L is the Cholesky factor of T."""
    if T.k != L.k:
        raise ValueError("dimension mismatch between T and L")
    return float(np.max(np.abs(T.toarray() - L.toarray() @ L.toarray().T)))
