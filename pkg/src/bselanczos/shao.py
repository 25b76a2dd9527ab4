"""Restarted structured Lanczos solver, UV-recurrence variant.

One structured step applies the minus-kernel to the current v-column, does a
local three-term orthogonalization, then an unconditional full
reorthogonalization against every stored column pair with the structured
coefficients c = Re(V^H u~) and d = i Im(U^H u~), corrects the diagonal
entry with the last c coefficient, and closes with the plus-kernel to get
the companion column and the normalization radicand.  The projected matrix
is real symmetric tridiagonal before the first restart and gains an
arrowhead coupling row afterwards; thick restart keeps the wanted Ritz
directions plus the carried next column.
"""

import numpy as np

from . import solver_common as sc
from .instances import random_complex_normal
from .operators import PairedBasis
from .smallmat import SymTridiag, symeig_dense, tridiag_eig

__all__ = ["ShaoState", "cold_start", "extend", "projected_matrix",
           "factorize", "restart", "check_convergence", "extract", "solve"]


class ShaoState:
    """Working decomposition of the UV solver.

    Columns 0..m-1 of U and V are valid.  The first ``r`` diagonal entries
    of ``alpha`` hold retained Ritz values after a restart, coupled to the
    carried column through ``b``; entries from ``r`` on are fresh recurrence
    coefficients.
    """

    def __init__(self, op, k, dtype=np.complex128):
        self.n = op.n
        self.k = k
        self.dtype = np.dtype(dtype)
        self.rdtype = np.float64 if self.dtype == np.complex128 else np.float32
        self.U = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.V = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.alpha = np.zeros(k, dtype=np.float64)
        self.beta = np.zeros(k, dtype=np.float64)
        self.b = np.zeros(0, dtype=np.float64)
        self.r = 0
        self.m = 0
        self.closed = False
        self.consec_breakdowns = 0
        self.draws = 0
        self.seed = sc.DEFAULT_SEED

    @property
    def steps_done(self):
        """Completed recurrence steps (order of the projected matrix)."""
        return max(self.m - 1, 0)

    def basis(self):
        """View of the active columns as a UV-flavored paired basis."""
        return PairedBasis(self.U[:, :self.m], self.V[:, :self.m], "UV")

    def eps(self):
        return float(np.finfo(self.rdtype).eps)


def _draw_fresh(op, state):
    """Random direction orthogonalized into the structured basis, or None."""
    n, m = state.n, state.m
    eps = state.eps()
    for _ in range(sc.MAX_BREAKDOWNS):
        state.draws += 1
        ut = random_complex_normal(n, state.seed + 7919 * state.draws)
        ut = ut.astype(state.dtype)
        raw_norm = float(np.linalg.norm(ut))
        for _ in range(2):
            y = np.conj(ut) @ state.U[:, :m]
            c = np.real(np.conj(ut) @ state.V[:, :m])
            d = -1j * np.imag(y)
            ut = ut - state.U[:, :m] @ c.astype(state.dtype) \
                    - state.V[:, :m] @ d.astype(state.dtype)
        if sc.collapsed(float(np.linalg.norm(ut)), raw_norm, eps):
            continue
        vt = op.apply_plus(ut)
        rad = float(np.real(np.vdot(ut, vt)))
        scale = float(np.linalg.norm(ut) * np.linalg.norm(vt)) + np.finfo(state.rdtype).tiny
        if not sc.check_radicand(rad, scale, eps):
            beta = np.sqrt(rad)
            return ut / beta, vt / beta
    return None


def cold_start(op, cfg_or_k, v0=None, dtype=np.complex128, seed=sc.DEFAULT_SEED):
    """Initialize the decomposition from a starting vector.

    Accepts either a SolverConfig or a plain basis size k.  The starting
    vector is normalized through the structured inner product: v~ is the
    plus-kernel image and beta_0 the square root of Re(u~^H v~).
    """
    if isinstance(cfg_or_k, sc.SolverConfig):
        cfg = cfg_or_k
        k, _ = cfg.resolve(op.n)
        v0 = cfg.initial_vector(op.n) if v0 is None else np.asarray(v0, cfg.dtype)
        dtype = cfg.dtype
        seed = cfg.seed
    else:
        k = int(cfg_or_k)
        if v0 is None:
            v0 = random_complex_normal(op.n, seed)
    state = ShaoState(op, k, dtype=dtype)
    state.seed = seed
    ut = np.asarray(v0, dtype=state.dtype)
    vt = op.apply_plus(ut)
    rad = float(np.real(np.vdot(ut, vt)))
    scale = float(np.linalg.norm(ut) * np.linalg.norm(vt)) + np.finfo(state.rdtype).tiny
    if sc.check_radicand(rad, scale, state.eps()):
        pair = _draw_fresh(op, state)
        if pair is None:
            raise sc.IndefiniteProblemError(
                "could not find a starting vector with positive radicand")
        state.U[:, 0], state.V[:, 0] = pair
    else:
        beta0 = np.sqrt(rad)
        state.U[:, 0] = ut / beta0
        state.V[:, 0] = vt / beta0
    state.m = 1
    return state


def extend(op, state, reorth=True, on_step=None):
    """Grow the decomposition to k completed steps (k+1 column pairs).

    The hybrid orthogonalization scheme (local recurrence followed by an
    unconditional full reorthogonalization) keeps the structured Gram
    identity near working precision; ``reorth=False`` disables the full
    pass and exists only as a diagnostic for loss-of-orthogonality studies.
    """
    eps = state.eps()
    tiny = float(np.finfo(state.rdtype).tiny)
    while state.m <= state.k and not state.closed:
        m = state.m
        j = m - 1
        uj = state.U[:, j]
        vj = state.V[:, j]
        x = op.apply_minus(vj)
        at = float(np.real(np.vdot(vj, x)))
        ut = x - at * uj
        if state.r > 0 and m == state.r + 1:
            ut -= state.U[:, :state.r] @ state.b.astype(state.dtype)
        elif j >= 1 and state.beta[j - 1] != 0.0:
            ut -= state.rdtype(state.beta[j - 1]) * state.U[:, j - 1]
        if reorth:
            alpha_j = at
            uc = ut
            pre = float(np.linalg.norm(uc))
            # one unconditional full pass; a second if the first one removed
            # a significant fraction of the candidate (twice is enough)
            for _ in range(2):
                y = np.conj(uc) @ state.U[:, :m]
                c = np.real(np.conj(uc) @ state.V[:, :m])
                d = -1j * np.imag(y)
                alpha_j += c[j]
                uc = uc - state.U[:, :m] @ c.astype(state.dtype) \
                        - state.V[:, :m] @ d.astype(state.dtype)
                nrm = float(np.linalg.norm(uc))
                if nrm > 0.5 * pre:
                    break
                pre = nrm
        else:
            alpha_j = at
            uc = ut
        ucnorm = float(np.linalg.norm(uc))
        state.alpha[j] = alpha_j
        if sc.collapsed(ucnorm, float(np.linalg.norm(x)), eps):
            broke = True
            rad = 0.0
        else:
            vc = op.apply_plus(uc)
            rad = float(np.real(np.vdot(uc, vc)))
            scale = ucnorm * float(np.linalg.norm(vc)) + tiny
            broke = sc.check_radicand(rad, scale, eps)
        if broke:
            state.consec_breakdowns += 1
            state.beta[j] = 0.0
            pair = _draw_fresh(op, state) if state.consec_breakdowns < sc.MAX_BREAKDOWNS else None
            if pair is None:
                state.U[:, m] = 0.0
                state.V[:, m] = 0.0
                state.m = m + 1
                state.closed = True
                break
            state.U[:, m], state.V[:, m] = pair
        else:
            beta_j = np.sqrt(rad)
            state.beta[j] = beta_j
            state.U[:, m] = uc / state.rdtype(beta_j)
            state.V[:, m] = vc / state.rdtype(beta_j)
            state.consec_breakdowns = 0
        state.m = m + 1
        if on_step is not None:
            on_step(state)
    return state


def projected_matrix(state):
    """Dense symmetric projected matrix of the current decomposition."""
    p = state.steps_done
    T = np.zeros((p, p))
    idx = np.arange(p)
    T[idx, idx] = state.alpha[:p]
    r = state.r
    if r > 0:
        T[r, :r] = state.b[:r]
        T[:r, r] = state.b[:r]
    for i in range(r, p - 1):
        T[i + 1, i] = T[i, i + 1] = state.beta[i]
    return T


def factorize(state, order="smallest-first"):
    """Sorted spectral factorization of the projected matrix.

    Before the first restart this is a plain tridiagonal eigendecomposition;
    afterwards the arrowhead coupling makes the matrix dense-symmetric and
    the Householder + QL path is used.
    """
    p = state.steps_done
    if state.r == 0:
        F = tridiag_eig(SymTridiag(state.alpha[:p], state.beta[:p - 1] if p > 1 else []),
                        order)
    else:
        F = symeig_dense(projected_matrix(state), order)
    dvals = sc.check_ritz_values(F.values, state.eps())
    return dvals, F.vectors


def check_convergence(state, factor, tol, criterion="relative"):
    """In-order converged count for a sorted factorization of the state."""
    dvals, Q = factor
    p = state.steps_done
    lam = np.sqrt(dvals)
    b_abs = np.abs(state.beta[p - 1] * Q[p - 1, :])
    return sc.count_converged(lam, b_abs, tol, criterion)


def restart(state, factor, r_new):
    """Truncate to the leading r_new Ritz directions plus the carried pair.

    The retained columns are rotated by the corresponding eigenvector block,
    the retained Ritz values become the diagonal of the compressed projected
    matrix, and the new coupling vector is the last recurrence coefficient
    times the bottom row of the rotation.
    """
    p = state.steps_done
    dvals, Q = factor
    r_new = min(r_new, p)
    Ur = (state.U[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    Vr = (state.V[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    bfull = state.beta[p - 1] * Q[p - 1, :]
    carried_u = state.U[:, p].copy()
    carried_v = state.V[:, p].copy()
    state.U[:, :r_new] = Ur
    state.V[:, :r_new] = Vr
    state.U[:, r_new] = carried_u
    state.V[:, r_new] = carried_v
    state.alpha[:r_new] = dvals[:r_new]
    state.beta[:] = 0.0
    state.b = np.asarray(bfull[:r_new], dtype=np.float64)
    state.r = r_new
    state.m = r_new + 1
    return state


def extract(op, state, factor, nev2):
    """Assemble the leading nev2 positive Ritz pairs into an EigResult.

    The eigenvector blocks come from the perfect-shuffle eigendecomposition
    of the projected matrix [[0, D], [I, 0]]: the raw right eigenvector of
    +lambda_i is [lam_i u^_i + v^_i; conj(lam_i u^_i - v^_i)] with u^, v^
    the rotated basis columns.  Residual norms of the raw pairs are exactly
    rho |b_i| with rho the norm of the stacked carried column.
    """
    p = state.steps_done
    dvals, Q = factor
    nev2 = min(nev2, p)
    lam = np.sqrt(dvals[:nev2])
    Qw = Q[:, :nev2]
    Uh = (state.U[:, :p] @ Qw).astype(state.dtype)
    Vh = (state.V[:, :p] @ Qw).astype(state.dtype)
    X1 = Uh * lam + Vh
    X2 = np.conj(Uh * lam - Vh)
    b_abs = np.abs(state.beta[p - 1] * Qw[p - 1, :])
    rho = np.sqrt(2.0) * float(np.linalg.norm(state.U[:, p]))
    resid_est = rho * b_abs
    scale = np.sqrt(np.sum(np.abs(X1) ** 2, axis=0) + np.sum(np.abs(X2) ** 2, axis=0))
    safe = np.where(scale > 0, scale, 1.0)
    X1 = X1 / safe
    X2 = X2 / safe
    return lam, X1, X2, resid_est, scale, rho, b_abs


def solve(op, cfg, progress=None):
    """Run the restarted solver to convergence and extract eigentriplets.

    ``progress`` receives a RestartRecord after every factorization.
    Returns an EigResult; non-convergence within the restart cap and
    breakdown exhaustion are reported through its flags, never silently.
    """
    if not isinstance(cfg, sc.SolverConfig):
        raise TypeError("cfg must be a SolverConfig")
    k, r_cfg = cfg.resolve(op.n)
    nev2 = cfg.nev // 2
    state = cold_start(op, cfg)
    order = cfg.order()
    history = []
    restarts = 0
    while True:
        extend(op, state)
        factor = factorize(state, order)
        nconv = check_convergence(state, factor, cfg.tol, cfg.criterion)
        p = state.steps_done
        b_abs = np.abs(state.beta[p - 1] * factor[1][p - 1, :4])
        rec = sc.RestartRecord(restarts, nconv, b_abs)
        history.append(rec)
        if progress is not None:
            progress(rec)
        if nconv >= nev2 or state.closed or restarts >= cfg.max_restarts:
            break
        restart(state, factor, sc.effective_restart_size(r_cfg, nconv, k))
        restarts += 1
    lam, X1, X2, resid_est, scale, rho, b_abs = extract(op, state, factor, nev2)
    return sc.EigResult(lam, X1, X2, resid_est, scale,
                        nconv=nconv, restarts=restarts,
                        converged=bool(nconv >= nev2),
                        breakdown=state.closed,
                        history=history, rho=rho, b_abs=b_abs)
