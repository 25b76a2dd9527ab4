"""Block operator for the structured eigenproblem and structured basis utilities.

The 2n x 2n matrix of interest is never formed.  It is defined by a pair
(R, C) with R Hermitian and C complex symmetric, and every solver touches it
only through the two kernels ``apply_plus`` (R u + C conj(u)) and
``apply_minus`` (R v - C conj(v)), which realize the top block of the full
matrix acting on [u; conj(u)] and [v; -conj(v)] respectively.
"""

import numpy as np
import scipy.sparse as sp

__all__ = [
    "BseOperator",
    "PairedBasis",
    "ScalarWorkspace",
    "structured_coeffs_uv",
    "orthogonality_defect",
]


def _is_sparse(mat):
    return sp.issparse(mat)


def _hermitian_defect(mat):
    """Max |M - M^H| entry; exact zero expected for explicitly symmetric storage."""
    if _is_sparse(mat):
        diff = (mat - mat.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    diff = mat - mat.conj().T
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def _symmetric_defect(mat):
    if _is_sparse(mat):
        diff = (mat - mat.T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    diff = mat - mat.T
    return float(np.max(np.abs(diff))) if diff.size else 0.0


class BseOperator:
    """Pair (R, C) defining the structured 2n x 2n operator.

    Parameters
    ----------
    R : (n, n) array or sparse matrix
        Hermitian block (resonant part).
    C : (n, n) array or sparse matrix
        Complex-symmetric block (coupling part).
    validate : bool
        Check the symmetry invariants on ingestion (exact by default).
    tol : float
        Allowed symmetry deviation; 0.0 demands exact storage symmetry.

    Notes
    -----
    Definiteness of the sign-stripped companion [[R, C], [conj(C), conj(R)]]
    is *not* checked here; solvers detect indefiniteness lazily through
    negative normalization radicands or negative Ritz values.

    Application of the kernels is read-only and safe to share between
    concurrently running solver instances.
    """

    def __init__(self, R, C, validate=True, tol=0.0):
        if R.shape[0] != R.shape[1] or C.shape[0] != C.shape[1]:
            raise ValueError("R and C must be square")
        if R.shape != C.shape:
            raise ValueError(
                f"dimension mismatch between R {R.shape} and C {C.shape}")
        if validate:
            dh = _hermitian_defect(R)
            if dh > tol:
                raise ValueError(
                    f"R is not Hermitian: max |R - R^H| entry = {dh:.3e}")
            ds = _symmetric_defect(C)
            if ds > tol:
                raise ValueError(
                    f"C is not complex-symmetric: max |C - C^T| entry = {ds:.3e}")
        self.n = R.shape[0]
        self.R = R
        self.C = C
        self.is_sparse = _is_sparse(R) or _is_sparse(C)

    def apply_plus(self, u):
        """Return R u + C conj(u), the top block of the operator on [u; conj(u)]."""
        u = np.asarray(u)
        if u.shape[0] != self.n:
            raise ValueError(f"vector length {u.shape[0]} != block size {self.n}")
        return self.R @ u + self.C @ np.conj(u)

    def apply_minus(self, v):
        """Return R v - C conj(v), the top block of the operator on [v; -conj(v)]."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise ValueError(f"vector length {v.shape[0]} != block size {self.n}")
        return self.R @ v - self.C @ np.conj(v)

    def norm_estimate(self):
        """Cheap upper bound on the 2-norm of the full operator (max row sum)."""
        rn = np.abs(self.R).sum(axis=1).max()
        cn = np.abs(self.C).sum(axis=1).max()
        return float(rn + cn)

    def apply_stacked(self, xs):
        """Apply the full 2n x 2n operator to stacked vectors or matrices.

        The bottom block rows are realized through conjugation,
        [-conj(C) -conj(R)] [x1; x2] = -conj(C conj(x1) + R conj(x2)),
        so the blocks are never assembled.
        """
        xs = np.asarray(xs)
        if xs.shape[0] != 2 * self.n:
            raise ValueError(f"stacked length {xs.shape[0]} != 2n = {2 * self.n}")
        x1, x2 = xs[: self.n], xs[self.n:]
        top = self.R @ x1 + self.C @ x2
        bottom = -np.conj(self.C @ np.conj(x1) + self.R @ np.conj(x2))
        return np.concatenate([top, bottom], axis=0)

    def apply_stacked_adjoint(self, ys):
        """Apply the conjugate transpose of the full operator (for left residuals)."""
        ys = np.asarray(ys)
        if ys.shape[0] != 2 * self.n:
            raise ValueError(f"stacked length {ys.shape[0]} != 2n = {2 * self.n}")
        y1, y2 = ys[: self.n], -ys[self.n:]
        top = self.R @ y1 + self.C @ y2
        bottom = np.conj(self.C @ np.conj(y1) + self.R @ np.conj(y2))
        return np.concatenate([top, bottom], axis=0)


def apply_plus(op, u):
    return op.apply_plus(u)


def apply_minus(op, v):
    return op.apply_minus(v)


class ScalarWorkspace:
    """Real recurrence coefficients of a projected decomposition.

    ``alpha[j]`` and ``beta[j]`` are the tridiagonal entries; ``aux`` holds the
    shifted diagonal a_j = (1 + alpha_j)/2 used by the projected-form solver.
    All beta entries of accepted steps are strictly positive.
    """

    def __init__(self, k, dtype=np.float64):
        self.alpha = np.zeros(k, dtype=dtype)
        self.beta = np.zeros(k, dtype=dtype)
        self.aux = np.zeros(k, dtype=dtype)


class PairedBasis:
    """Two n x m complex column collections encoding a structured 2n x 2m basis.

    flavor selects the orthogonality convention the columns are built under:

    - ``"UV"``: [[V, U], [conj(V), -conj(U)]]^H [[U, V], [conj(U), -conj(V)]] = 2I
    - ``"MN"``: primed companions required; the signature-weighted cross Gram
      with (M', N') equals I
    - ``"WZ"``: [[W, -conj(Z)], [-Z, conj(W)]]^H [[W, conj(Z)], [Z, conj(W)]] = I

    ``first``/``second`` may hold a different number of active columns
    (the first carries the next-step vector between restarts).
    """

    def __init__(self, first, second, flavor, first_prime=None, second_prime=None):
        if flavor not in ("UV", "MN", "WZ"):
            raise ValueError(f"unknown flavor {flavor!r}")
        if flavor == "MN" and (first_prime is None or second_prime is None):
            raise ValueError("MN flavor requires primed companion bases")
        self.first = first
        self.second = second
        self.first_prime = first_prime
        self.second_prime = second_prime
        self.flavor = flavor

    @property
    def ncols(self):
        return (self.first.shape[1], self.second.shape[1])


def structured_coeffs_uv(U, V, u_tilde):
    """Expansion coefficients of a candidate vector in a UV-flavored basis.

    Returns (c, d) with c = Re(V^H u~) real and d = i Im(U^H u~) purely
    imaginary; these are the unique structured-component coefficients under
    the UV orthogonality convention.  The reorthogonalized residual is
    u~ - U c - V d.
    """
    if U.shape[1] != V.shape[1]:
        raise ValueError("U and V must have the same number of columns")
    c = np.real(V.conj().T @ u_tilde)
    d = 1j * np.imag(U.conj().T @ u_tilde)
    return c, d


def orthogonality_defect(basis):
    """Max-norm deviation of the flavor's Gram identity.

    Computed with explicit structured inner products over all active columns;
    rectangular off-identity blocks are compared against zero.
    """
    if basis.first.shape[1] == 0:
        raise ValueError("basis is empty")
    if basis.flavor == "UV":
        U, V = basis.first, basis.second
        blocks = [
            2.0 * np.real(V.conj().T @ U) - 2.0 * np.eye(V.shape[1], U.shape[1]),
            2.0 * np.imag(V.conj().T @ V),
            2.0 * np.imag(U.conj().T @ U),
        ]
    elif basis.flavor == "MN":
        M, N = basis.first, basis.second
        Mp, Np = basis.first_prime, basis.second_prime
        blocks = [
            2.0 * np.real(Mp.conj().T @ M) - np.eye(Mp.shape[1], M.shape[1]),
            2.0 * np.imag(Mp.conj().T @ N),
            2.0 * np.imag(Np.conj().T @ M),
            2.0 * np.real(Np.conj().T @ N) - np.eye(Np.shape[1], N.shape[1]),
        ]
    else:  # WZ
        W, Z = basis.first, basis.second
        blocks = [
            W.conj().T @ W - Z.conj().T @ Z - np.eye(W.shape[1], Z.shape[1]),
            W.conj().T @ np.conj(Z) - Z.conj().T @ np.conj(W),
        ]
    return max(float(np.max(np.abs(b))) if b.size else 0.0 for b in blocks)
