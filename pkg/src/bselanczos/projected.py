"""Restarted structured Lanczos solver, projected-form variant.

The W/Z recurrence carries half-sum and half-difference combinations of the
UV columns, so the projected matrix itself has the block structure of the
full problem, with blocks (I + T)/2 and (I - T)/2 built from the same real
tridiagonal T as the UV variant (both produce identical Ritz data from the
same start vector).  Only the two bases are stored; the u/v working vectors
of a step are transient.  Restart rotates both bases by the eigenvector
factor of T; the trailing coupling of the truncated relation carries a
factor beta_k/2, pinned here by the dense-assembly residual tests, while
convergence and residual estimates use the doubled (UV-equivalent)
couplings so all three solvers share one criterion.
"""

import numpy as np

from . import solver_common as sc
from .instances import random_complex_normal
from .operators import PairedBasis, ScalarWorkspace
from .smallmat import SymTridiag, symeig_dense, tridiag_eig

__all__ = ["ProjectedState", "cold_start", "extend", "projected_matrix",
           "factorize", "restart", "check_convergence", "extract", "solve"]


class ProjectedState:
    """Working decomposition of the projected-form solver.

    Exactly two n x (k+1) bases are held.  ``work`` stores the recurrence
    coefficients: alpha/beta as in the UV variant plus the shifted diagonal
    a_j = (1 + alpha_j)/2.  ``b`` is the restart coupling of the truncated
    relation (the half-scaled one that enters the orthogonalization).
    """

    def __init__(self, op, k, dtype=np.complex128):
        self.n = op.n
        self.k = k
        self.dtype = np.dtype(dtype)
        self.rdtype = np.float64 if self.dtype == np.complex128 else np.float32
        self.W = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.Z = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.work = ScalarWorkspace(k)
        self.b = np.zeros(0, dtype=np.float64)
        self.r = 0
        self.m = 0
        self.vwork = None
        self.closed = False
        self.consec_breakdowns = 0
        self.draws = 0
        self.seed = sc.DEFAULT_SEED

    @property
    def steps_done(self):
        return max(self.m - 1, 0)

    @property
    def alpha(self):
        return self.work.alpha

    @property
    def beta(self):
        return self.work.beta

    def basis(self):
        return PairedBasis(self.W[:, :self.m], self.Z[:, :self.m], "WZ")

    def eps(self):
        return float(np.finfo(self.rdtype).eps)


def _pair_from_uv(u, v):
    """Structured (w, z) pair from a normalized UV pair."""
    return (u + v) / 2.0, np.conj(u - v) / 2.0


def _normalize_u(op, state, cand, pre_norm):
    """Normalize a u-candidate through the plus-kernel; None on collapse."""
    eps = state.eps()
    if sc.collapsed(float(np.linalg.norm(cand)), pre_norm, eps):
        return None
    img = op.apply_plus(cand)
    rad = float(np.real(np.vdot(cand, img)))
    scale = float(np.linalg.norm(cand) * np.linalg.norm(img)) \
        + float(np.finfo(state.rdtype).tiny)
    if sc.check_radicand(rad, scale, eps):
        return None
    nrm = np.sqrt(rad)
    return cand / state.rdtype(nrm), img / state.rdtype(nrm), nrm


def _draw_fresh(op, state, ncols):
    """Random u-direction orthogonalized into the WZ basis, or None."""
    for _ in range(sc.MAX_BREAKDOWNS):
        state.draws += 1
        cand = random_complex_normal(state.n, state.seed + 4373 * state.draws)
        cand = cand.astype(state.dtype)
        pre = float(np.linalg.norm(cand))
        for _ in range(2):
            c = np.conj(np.conj(cand) @ state.W[:, :ncols]) \
                - np.conj(cand @ state.Z[:, :ncols])
            cand = cand - state.W[:, :ncols] @ c \
                        - np.conj(state.Z[:, :ncols] @ c)
        got = _normalize_u(op, state, cand, pre)
        if got is not None:
            return got
    return None


def cold_start(op, cfg_or_k, v0=None, dtype=np.complex128, seed=sc.DEFAULT_SEED):
    """Initialize from a normalized UV pair built from the starting vector."""
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
    state = ProjectedState(op, k, dtype=dtype)
    state.seed = seed
    got = _normalize_u(op, state, np.asarray(v0, dtype=state.dtype),
                       float(np.linalg.norm(v0)))
    if got is None:
        got = _draw_fresh(op, state, 0)
        if got is None:
            raise sc.IndefiniteProblemError(
                "could not find a starting vector with positive radicand")
    u1, v1 = got[0], got[1]
    state.W[:, 0], state.Z[:, 0] = _pair_from_uv(u1, v1)
    state.vwork = v1
    state.m = 1
    return state


def extend(op, state, reorth=True, on_step=None):
    """Grow the decomposition to k completed steps (k+1 column pairs)."""
    eps = state.eps()
    if state.vwork is None:
        state.vwork = state.W[:, state.m - 1] - np.conj(state.Z[:, state.m - 1])
    while state.m <= state.k and not state.closed:
        j = state.m
        wj = state.W[:, j - 1]
        zj = state.Z[:, j - 1]
        v = state.vwork
        vp = op.apply_minus(v)
        wp = (vp + v) / 2.0
        zp = np.conj(vp - v) / 2.0
        at = float(np.real(np.vdot(wj, wp) - np.vdot(zj, zp)))
        ut = wp - at * wj - (at - 1.0) * np.conj(zj)
        if state.r > 0 and j == state.r + 1:
            bcast = state.b.astype(state.dtype)
            ut -= state.W[:, :state.r] @ bcast
            ut -= np.conj(state.Z[:, :state.r]) @ bcast
        elif j >= 2 and state.beta[j - 2] != 0.0:
            half = state.rdtype(0.5 * state.beta[j - 2])
            ut -= half * (state.W[:, j - 2] + np.conj(state.Z[:, j - 2]))
        if reorth:
            a_j = at
            last = float(np.linalg.norm(ut))
            # one unconditional full pass; a second if the first one removed
            # a significant fraction of the candidate (twice is enough)
            for _ in range(2):
                c = np.conj(np.conj(ut) @ state.W[:, :j]) - np.conj(ut @ state.Z[:, :j])
                a_j += float(np.real(c[j - 1]))
                ut = ut - state.W[:, :j] @ c - np.conj(state.Z[:, :j] @ c)
                nrm = float(np.linalg.norm(ut))
                if nrm > 0.5 * last:
                    break
                last = nrm
        else:
            a_j = at
        alpha_j = 2.0 * a_j - 1.0
        state.work.aux[j - 1] = a_j
        state.alpha[j - 1] = alpha_j
        got = _normalize_u(op, state, ut, float(np.linalg.norm(wp)))
        if got is None:
            state.consec_breakdowns += 1
            state.beta[j - 1] = 0.0
            got = (_draw_fresh(op, state, j)
                   if state.consec_breakdowns < sc.MAX_BREAKDOWNS else None)
            if got is None:
                state.W[:, j] = 0.0
                state.Z[:, j] = 0.0
                state.vwork = np.zeros(state.n, dtype=state.dtype)
                state.m = j + 1
                state.closed = True
                break
            un, vn = got[0], got[1]
        else:
            un, vn = got[0], got[1]
            # the UV-equivalent coefficient: the candidate is half the UV one
            state.beta[j - 1] = 2.0 * got[2]
            state.consec_breakdowns = 0
        state.W[:, j], state.Z[:, j] = _pair_from_uv(un, vn)
        state.vwork = vn
        state.m = j + 1
        if on_step is not None:
            on_step(state)
    return state


def projected_matrix(state):
    """Dense symmetric tridiagonal-plus-arrowhead T of the decomposition.

    This is the same matrix as in the UV variant; the structured projected
    blocks are (I + T)/2 and (I - T)/2.  The arrow couplings are the doubled
    stored half-couplings.
    """
    p = state.steps_done
    T = np.zeros((p, p))
    idx = np.arange(p)
    T[idx, idx] = state.alpha[:p]
    r = state.r
    if r > 0:
        T[r, :r] = 2.0 * state.b[:r]
        T[:r, r] = 2.0 * state.b[:r]
    for i in range(r, p - 1):
        T[i + 1, i] = T[i, i + 1] = state.beta[i]
    return T


def factorize(state, order="smallest-first"):
    """Sorted spectral factorization of the equivalent tridiagonal problem."""
    p = state.steps_done
    if state.r == 0:
        F = tridiag_eig(SymTridiag(state.alpha[:p],
                                   state.beta[:p - 1] if p > 1 else []), order)
    else:
        F = symeig_dense(projected_matrix(state), order)
    dvals = sc.check_ritz_values(F.values, state.eps())
    return dvals, F.vectors


def check_convergence(state, factor, tol, criterion="relative"):
    dvals, Q = factor
    p = state.steps_done
    lam = np.sqrt(dvals)
    b_abs = np.abs(state.beta[p - 1] * Q[p - 1, :])
    return sc.count_converged(lam, b_abs, tol, criterion)


def restart(state, factor, r_new):
    """Truncate to the leading r_new Ritz directions plus the carried pair.

    Both bases rotate by the same real eigenvector factor; the compressed
    projected blocks are rebuilt from the retained Ritz values, and the new
    coupling is half the UV-equivalent one (trailing factor beta_k/2 of the
    truncated relation).
    """
    p = state.steps_done
    dvals, Q = factor
    r_new = min(r_new, p)
    Wr = (state.W[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    Zr = (state.Z[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    bfull = 0.5 * state.beta[p - 1] * Q[p - 1, :]
    carried = (state.W[:, p].copy(), state.Z[:, p].copy())
    state.W[:, :r_new] = Wr
    state.Z[:, :r_new] = Zr
    state.W[:, r_new], state.Z[:, r_new] = carried
    state.alpha[:r_new] = dvals[:r_new]
    state.work.aux[:r_new] = (1.0 + dvals[:r_new]) / 2.0
    state.beta[:] = 0.0
    state.b = np.asarray(bfull[:r_new], dtype=np.float64)
    state.r = r_new
    state.m = r_new + 1
    state.vwork = None
    return state


def extract(op, state, factor, nev2):
    """Assemble the leading nev2 positive Ritz pairs into result blocks.

    The extraction factor has blocks sqrt(D) + I and sqrt(D) - I; column i
    of the raw right eigenvectors is [(lam_i + 1) w~_i + (lam_i - 1)
    conj(z~_i); (lam_i + 1) z~_i + (lam_i - 1) conj(w~_i)], identical to the
    UV-variant extraction of the same decomposition.
    """
    p = state.steps_done
    dvals, Q = factor
    nev2 = min(nev2, p)
    lam = np.sqrt(dvals[:nev2])
    Qw = Q[:, :nev2]
    Wh = (state.W[:, :p] @ Qw).astype(state.dtype)
    Zh = (state.Z[:, :p] @ Qw).astype(state.dtype)
    X1 = Wh * (lam + 1.0) + np.conj(Zh) * (lam - 1.0)
    X2 = Zh * (lam + 1.0) + np.conj(Wh) * (lam - 1.0)
    b_abs = np.abs(state.beta[p - 1] * Qw[p - 1, :])
    ucar = state.W[:, p] + np.conj(state.Z[:, p])
    rho = np.sqrt(2.0) * float(np.linalg.norm(ucar))
    resid_est = rho * b_abs
    scale = np.sqrt(np.sum(np.abs(X1) ** 2, axis=0) + np.sum(np.abs(X2) ** 2, axis=0))
    safe = np.where(scale > 0, scale, 1.0)
    X1 = X1 / safe
    X2 = X2 / safe
    return lam, X1, X2, resid_est, scale, rho, b_abs


def solve(op, cfg, progress=None):
    """Run the restarted projected-form solver; see the UV variant driver."""
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
        rec = sc.RestartRecord(restarts, nconv,
                               np.abs(state.beta[p - 1] * factor[1][p - 1, :4]))
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
