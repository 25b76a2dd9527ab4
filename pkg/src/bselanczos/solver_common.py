"""Configuration, result container, and policies shared by the three solvers."""

import numpy as np

from .errors import IndefiniteProblemError
from .instances import random_complex_normal

__all__ = ["SolverConfig", "EigResult", "RestartRecord", "DEFAULT_SEED"]

DEFAULT_SEED = 20240901

# radicand thresholds: below -sqrt(eps)*scale is a modeling error, anything in
# (-sqrt(eps)*scale, 100*eps*scale] is a lucky breakdown (invariant subspace)
_BREAKDOWN_FACTOR = 100.0
_MAX_BREAKDOWNS = 3


class SolverConfig:
    """Options shared by all three structured eigensolvers.

    Parameters
    ----------
    nev : int
        Number of requested eigenpairs (even); the solver computes nev/2
        positive eigenvalues and mirrors them to the negative side.
    ncv : int or None
        Number of structured column pairs k of the working decomposition;
        defaults to nev (so the solver computes nev/2 pairs with a basis of
        twice that many wanted directions), floored at 8 and capped at n.
    restart : int or None
        Compressed size r after a restart.  The default keeps the converged
        directions plus half of the unconverged subspace, r = nconv +
        (ncv - nconv) // 2, which reproduces the reference restart counts
        on the pentadiagonal family (a fixed ncv // 2 needs over twice as
        many cycles there).  An explicit value fixes r, still floored at
        nconv + 1 so converged directions stay at the front and capped at
        ncv - 1.
    tol : float
        Convergence tolerance on the residual-norm estimates.
    criterion : {"relative", "absolute"}
        Relative tests |b_i| < tol * lambda_i; absolute tests |b_i| < tol.
    which : {"smallest", "largest"}
        Which end of the magnitude spectrum to target.
    max_restarts : int
        Cap on restart cycles; exceeding it returns partial results with
        ``converged=False`` rather than raising.
    seed : int
        Seed for the deterministic initial vector (SplitMix64 stream).
    v0 : array or None
        User-supplied initial vector of length n (overrides the seed).
    precision : {"double", "single"}
        Working floating-point precision of the basis and recurrences.
    """

    def __init__(self, nev, ncv=None, restart=None, tol=1e-8,
                 criterion="relative", which="smallest", max_restarts=10000,
                 seed=DEFAULT_SEED, v0=None, precision="double"):
        self.nev = int(nev)
        self.ncv = None if ncv is None else int(ncv)
        self.restart = None if restart is None else int(restart)
        self.tol = float(tol)
        self.criterion = criterion
        self.which = which
        self.max_restarts = int(max_restarts)
        self.seed = int(seed)
        self.v0 = v0
        self.precision = precision

    def resolve(self, n):
        """Validate against the problem size and fill in the defaults."""
        if self.nev < 2 or self.nev % 2 != 0:
            raise ValueError("nev must be a positive even integer")
        if self.criterion not in ("relative", "absolute"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.which not in ("smallest", "largest"):
            raise ValueError(f"unknown which {self.which!r}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.precision not in ("double", "single"):
            raise ValueError(f"unknown precision {self.precision!r}")
        k = self.ncv if self.ncv is not None else max(self.nev, 8)
        k = min(k, n)
        if k < 1:
            raise ValueError("ncv must be at least 1")
        if self.nev // 2 > k:
            raise ValueError(
                f"nev/2 = {self.nev // 2} wanted pairs do not fit in ncv = {k}")
        if k > n:
            raise ValueError(f"ncv = {k} exceeds the block dimension n = {n}")
        r = self.restart
        if r is not None:
            r = max(min(r, k - 1), 0)
        return k, r

    @property
    def dtype(self):
        return np.complex128 if self.precision == "double" else np.complex64

    @property
    def rdtype(self):
        return np.float64 if self.precision == "double" else np.float32

    def initial_vector(self, n):
        if self.v0 is not None:
            v0 = np.asarray(self.v0, dtype=self.dtype)
            if v0.shape != (n,):
                raise ValueError(f"v0 must have shape ({n},), got {v0.shape}")
            if not np.any(v0):
                raise ValueError("v0 must be nonzero")
            return v0.copy()
        return random_complex_normal(n, self.seed).astype(self.dtype)

    def order(self):
        return "smallest-first" if self.which == "smallest" else "largest-first"


class RestartRecord:
    """Per-cycle progress: restart index, converged count, leading couplings."""

    def __init__(self, index, nconv, b_head):
        self.index = index
        self.nconv = nconv
        self.b_head = b_head

    def __repr__(self):
        head = ", ".join(f"{v:.2e}" for v in self.b_head)
        return f"RestartRecord({self.index}, nconv={self.nconv}, |b|=[{head}])"


class EigResult:
    """Positive Ritz values with eigenvector blocks and convergence metadata.

    The full eigenpair set is the mirror closure {+lambda_i, -lambda_i}; only
    the blocks X1, X2 of the positive-side right eigenvectors are stored
    (normalized so each full right eigenvector has unit 2-norm), everything
    else follows from the block structure of the problem:

    - right eigenvector of +lambda_i: [x1_i; x2_i]
    - right eigenvector of -lambda_i: [conj(x2_i); conj(x1_i)]
    - left eigenvector of +lambda_i: [x1_i; -x2_i]
    - left eigenvector of -lambda_i: [-conj(x2_i); conj(x1_i)]
    """

    def __init__(self, values, X1, X2, resid_est, scale, nconv, restarts,
                 converged, breakdown, history, rho, b_abs):
        self.values = values
        self.X1 = X1
        self.X2 = X2
        self.resid_est = resid_est
        self.scale = scale
        self.nconv = nconv
        self.restarts = restarts
        self.converged = converged
        self.breakdown = breakdown
        self.history = history
        self.rho = rho
        self.b_abs = b_abs

    @property
    def nev(self):
        return 2 * self.values.size

    def values_full(self):
        """All returned eigenvalues: positives followed by their negatives."""
        return np.concatenate([self.values, -self.values])

    def right_vectors(self):
        """2n x nev matrix of unit-norm right eigenvectors (+ block, - block)."""
        plus = np.vstack([self.X1, self.X2])
        minus = np.vstack([np.conj(self.X2), np.conj(self.X1)])
        return np.hstack([plus, minus])

    def left_vectors(self):
        """2n x nev matrix of left eigenvectors paired with right_vectors()."""
        plus = np.vstack([self.X1, -self.X2])
        minus = np.vstack([-np.conj(self.X2), np.conj(self.X1)])
        return np.hstack([plus, minus])

    def raw_right_vectors(self):
        """Right eigenvectors before unit normalization (positive side only)."""
        return np.vstack([self.X1, self.X2]) * self.scale

    def biorthogonality(self):
        """Max deviation of Y^H X from the diagonal of its own pairings."""
        X = self.right_vectors()
        Y = self.left_vectors()
        G = Y.conj().T @ X
        return float(np.max(np.abs(G - np.diag(np.diag(G)))))


def count_converged(lam, b_abs, tol, criterion):
    """In-order convergence count: stops at the first pair failing the test."""
    if criterion == "relative":
        good = b_abs < tol * np.abs(lam)
    else:
        good = b_abs < tol
    nconv = 0
    for flag in good:
        if not flag:
            break
        nconv += 1
    return nconv


def effective_restart_size(r_cfg, nconv, k):
    """Restart size policy: at least nconv + 1, strictly below k.

    With no configured size, keep the converged directions plus half of the
    unconverged subspace.
    """
    base = nconv + (k - nconv) // 2 if r_cfg is None else r_cfg
    return min(max(base, nconv + 1), k - 1)


def check_radicand(rad, scale, eps):
    """Classify a normalization radicand.

    Returns True for a breakdown (treat as invariant subspace), False for a
    healthy positive value; raises for significantly negative radicands.
    ``scale`` is the product of the norms of the two vectors entering the
    inner product, so a genuinely indefinite operator cannot hide behind a
    small candidate.
    """
    floor = np.sqrt(eps) * scale
    if rad < -floor:
        raise IndefiniteProblemError(
            f"normalization radicand {rad:.3e} is negative beyond roundoff "
            f"(scale {scale:.3e}); the sign-stripped companion is not "
            "positive definite")
    return rad <= _BREAKDOWN_FACTOR * eps * scale


def collapsed(norm_after, norm_before, eps):
    """True when orthogonalization wiped out the candidate.

    A candidate whose surviving component is at roundoff level relative to
    the kernel output it came from signals an invariant subspace; continuing
    would normalize amplification noise into the basis and destroy the
    orthogonality contract.
    """
    return norm_after <= _BREAKDOWN_FACTOR * eps * norm_before


def check_ritz_values(dvals, eps):
    """Clamp roundoff-negative Ritz values of the projected problem to zero.

    A significantly negative value means the companion operator is
    indefinite, which the structured recurrences cannot handle.
    """
    dmax = float(np.max(np.abs(dvals))) if dvals.size else 0.0
    floor = -np.sqrt(eps) * max(dmax, 1.0)
    if np.any(dvals < floor):
        raise IndefiniteProblemError(
            f"projected problem has negative Ritz value {np.min(dvals):.3e}; "
            "the sign-stripped companion is not positive definite")
    return np.maximum(dvals, 0.0)


MAX_BREAKDOWNS = _MAX_BREAKDOWNS
