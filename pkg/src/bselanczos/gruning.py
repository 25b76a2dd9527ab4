"""Restarted structured Lanczos solver, four-basis bidiagonal variant.

Each full step is two half-steps: the odd half produces an n-column from the
stored primed image of the newest m-column, the even half produces the next
m-column and is the only place where full reorthogonalization is applied
(with coefficients c = 2 Re(M'^H m~), d = 2i Im(N'^H m~)); keeping the new
m-columns orthogonal is enough to keep the n-columns orthogonal as well.
Both normalization radicands carry a factor two relative to the UV variant.
The projected matrix is lower bidiagonal and positive, restart goes through
its SVD, and the primed bases are rotated rather than recomputed (the
defining relation is linear and the rotations are real).
"""

import numpy as np

from . import solver_common as sc
from .instances import random_complex_normal
from .operators import PairedBasis
from .smallmat import LowerBidiag, bidiag_svd, svd_dense

__all__ = ["GruningState", "cold_start", "extend", "projected_matrix",
           "factorize", "restart", "check_convergence", "extract", "solve"]


class GruningState:
    """Working decomposition of the bidiagonal-form solver.

    M/Mp hold m columns, N/Np hold m - 1 (the m basis always leads by the
    carried column).  ``bd`` stores the diagonal recurrence coefficients
    (retained singular values in its first ``r`` slots after a restart),
    ``bs`` the subdiagonal ones with the trailing coupling in slot p - 1.
    """

    def __init__(self, op, k, dtype=np.complex128):
        self.n = op.n
        self.k = k
        self.dtype = np.dtype(dtype)
        self.rdtype = np.float64 if self.dtype == np.complex128 else np.float32
        self.M = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.N = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.Mp = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.Np = np.zeros((self.n, k + 1), dtype=self.dtype, order="F")
        self.bd = np.zeros(k, dtype=np.float64)
        self.bs = np.zeros(k, dtype=np.float64)
        self.b = np.zeros(0, dtype=np.float64)
        self.r = 0
        self.m = 0
        self.closed = False
        self.consec_breakdowns = 0
        self.draws = 0
        self.seed = sc.DEFAULT_SEED

    @property
    def steps_done(self):
        return max(self.m - 1, 0)

    def basis(self):
        """Active columns as an MN-flavored paired basis with companions."""
        p = self.steps_done
        return PairedBasis(self.M[:, :self.m], self.N[:, :p], "MN",
                           first_prime=self.Mp[:, :self.m],
                           second_prime=self.Np[:, :p])

    def eps(self):
        return float(np.finfo(self.rdtype).eps)


def _normalize_m(op, state, cand, pre_norm):
    """Radicand check and normalization of an m-candidate; None on collapse."""
    eps = state.eps()
    if sc.collapsed(float(np.linalg.norm(cand)), pre_norm, eps):
        return None
    img = op.apply_plus(cand)
    rad = 2.0 * float(np.real(np.vdot(cand, img)))
    scale = 2.0 * float(np.linalg.norm(cand) * np.linalg.norm(img)) \
        + float(np.finfo(state.rdtype).tiny)
    if sc.check_radicand(rad, scale, eps):
        return None
    beta = np.sqrt(rad)
    return cand / state.rdtype(beta), img / state.rdtype(beta), beta


def _draw_fresh_m(op, state, ncols_m=None, ncols_n=None):
    """Random m-direction orthogonalized into the basis, or None."""
    p = state.steps_done if ncols_n is None else ncols_n
    mm = state.m if ncols_m is None else ncols_m
    for _ in range(sc.MAX_BREAKDOWNS):
        state.draws += 1
        cand = random_complex_normal(state.n, state.seed + 6211 * state.draws)
        cand = cand.astype(state.dtype)
        pre = float(np.linalg.norm(cand))
        for _ in range(2):
            c = 2.0 * np.real(np.conj(cand) @ state.Mp[:, :mm])
            d = -2.0j * np.imag(np.conj(cand) @ state.Np[:, :p])
            cand = cand - state.M[:, :mm] @ c.astype(state.dtype) \
                        - state.N[:, :p] @ d.astype(state.dtype)
        got = _normalize_m(op, state, cand, pre)
        if got is not None:
            return got
    return None


def cold_start(op, cfg_or_k, v0=None, dtype=np.complex128, seed=sc.DEFAULT_SEED):
    """Initialize from a starting vector, normalized through the S-product."""
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
    state = GruningState(op, k, dtype=dtype)
    state.seed = seed
    got = _normalize_m(op, state, np.asarray(v0, dtype=state.dtype),
                       float(np.linalg.norm(v0)))
    if got is None:
        got = _draw_fresh_m(op, state)
        if got is None:
            raise sc.IndefiniteProblemError(
                "could not find a starting vector with positive radicand")
    state.M[:, 0], state.Mp[:, 0] = got[0], got[1]
    state.m = 1
    return state


def extend(op, state, reorth=True, on_step=None):
    """Grow the decomposition to k completed double-steps."""
    eps = state.eps()
    while state.m <= state.k and not state.closed:
        j = state.m  # one-based step index; produces N column j-1, M column j
        mj = state.M[:, j - 1]
        mpj = state.Mp[:, j - 1]
        if state.r > 0 and j == state.r + 1:
            nt = mpj - state.N[:, :state.r] @ state.b.astype(state.dtype)
        elif j >= 2 and state.bs[j - 2] != 0.0:
            nt = mpj - state.rdtype(state.bs[j - 2]) * state.N[:, j - 2]
        else:
            nt = mpj.copy()
        if sc.collapsed(float(np.linalg.norm(nt)), float(np.linalg.norm(mpj)), eps):
            # no new n-direction exists from the carried column: close here
            state.closed = True
            break
        x = op.apply_minus(nt)
        rad = 2.0 * float(np.real(np.vdot(nt, x)))
        scale = 2.0 * float(np.linalg.norm(nt) * np.linalg.norm(x)) \
            + float(np.finfo(state.rdtype).tiny)
        if sc.check_radicand(rad, scale, eps):
            state.closed = True
            break
        bhat = np.sqrt(rad)
        state.bd[j - 1] = bhat
        state.N[:, j - 1] = nt / state.rdtype(bhat)
        state.Np[:, j - 1] = x / state.rdtype(bhat)
        mt = state.Np[:, j - 1] - state.rdtype(bhat) * mj
        pre = float(np.linalg.norm(state.Np[:, j - 1]))
        if reorth:
            # one unconditional full pass; a second if the first one removed
            # a significant fraction of the candidate (twice is enough)
            last = float(np.linalg.norm(mt))
            for _ in range(2):
                c = 2.0 * np.real(np.conj(mt) @ state.Mp[:, :j])
                d = -2.0j * np.imag(np.conj(mt) @ state.Np[:, :j])
                mt = mt - state.M[:, :j] @ c.astype(state.dtype) \
                        - state.N[:, :j] @ d.astype(state.dtype)
                nrm = float(np.linalg.norm(mt))
                if nrm > 0.5 * last:
                    break
                last = nrm
        got = _normalize_m(op, state, mt, pre)
        if got is None:
            state.consec_breakdowns += 1
            state.bs[j - 1] = 0.0
            got = (_draw_fresh_m(op, state, ncols_m=j, ncols_n=j)
                   if state.consec_breakdowns < sc.MAX_BREAKDOWNS else None)
            if got is None:
                state.M[:, j] = 0.0
                state.Mp[:, j] = 0.0
                state.m = j + 1
                state.closed = True
                break
            state.M[:, j], state.Mp[:, j] = got[0], got[1]
        else:
            state.M[:, j], state.Mp[:, j] = got[0], got[1]
            state.bs[j - 1] = got[2]
            state.consec_breakdowns = 0
        state.m = j + 1
        if on_step is not None:
            on_step(state)
    return state


def projected_matrix(state):
    """Dense lower-triangular projected matrix of the current decomposition."""
    p = state.steps_done
    L = np.zeros((p, p))
    idx = np.arange(p)
    L[idx, idx] = state.bd[:p]
    r = state.r
    if r > 0:
        L[r, :r] = state.b[:r]
    for i in range(r, p - 1):
        L[i + 1, i] = state.bs[i]
    return L


def factorize(state, order="smallest-first"):
    """Sorted SVD of the projected matrix: (sigma, Q, P).

    A plain positive bidiagonal before the first restart (the Golub-Kahan
    core runs on it directly); afterwards the retained-diagonal plus spike
    row shape goes through Householder bidiagonalization first.
    """
    p = state.steps_done
    if state.r == 0:
        Q, sig, P = bidiag_svd(
            LowerBidiag(state.bd[:p], state.bs[:p - 1] if p > 1 else []), order)
    else:
        Qd, sig, Pd = svd_dense(projected_matrix(state), order)
        Q, P = Qd, Pd
    return sig, Q, P


def check_convergence(state, factor, tol, criterion="relative"):
    sig, Q, P = factor
    p = state.steps_done
    b_abs = np.abs(state.bs[p - 1] * P[p - 1, :])
    return sc.count_converged(sig, b_abs, tol, criterion)


def restart(state, factor, r_new):
    """Truncate to the leading r_new singular directions plus the carried pair.

    The m-side rotates by Q, the n-side by P, the primed bases rotate with
    their partners (linearity of the defining relation), and the coupling
    becomes the trailing coefficient times the bottom row of P.
    """
    p = state.steps_done
    sig, Q, P = factor
    r_new = min(r_new, p)
    Mr = (state.M[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    Mpr = (state.Mp[:, :p] @ Q[:, :r_new]).astype(state.dtype)
    Nr = (state.N[:, :p] @ P[:, :r_new]).astype(state.dtype)
    Npr = (state.Np[:, :p] @ P[:, :r_new]).astype(state.dtype)
    bfull = state.bs[p - 1] * P[p - 1, :]
    carried = (state.M[:, p].copy(), state.Mp[:, p].copy())
    state.M[:, :r_new] = Mr
    state.Mp[:, :r_new] = Mpr
    state.N[:, :r_new] = Nr
    state.Np[:, :r_new] = Npr
    state.M[:, r_new], state.Mp[:, r_new] = carried
    state.bd[:] = 0.0
    state.bs[:] = 0.0
    state.bd[:r_new] = sig[:r_new]
    state.b = np.asarray(bfull[:r_new], dtype=np.float64)
    state.r = r_new
    state.m = r_new + 1
    return state


def extract(op, state, factor, nev2):
    """Assemble the leading nev2 positive Ritz pairs into result blocks.

    The raw right eigenvector of +sigma_i is [(m^_i + n^_i); conj(m^_i -
    n^_i)] / sqrt(2); its residual norm is exactly rho |b_i| with rho the
    norm of the carried m-column (the stacked carried vector divided by
    the sqrt(2) of the extraction).
    """
    p = state.steps_done
    sig, Q, P = factor
    nev2 = min(nev2, p)
    lam = sig[:nev2].copy()
    Mh = (state.M[:, :p] @ Q[:, :nev2]).astype(state.dtype)
    Nh = (state.N[:, :p] @ P[:, :nev2]).astype(state.dtype)
    X1 = (Mh + Nh) / np.sqrt(2.0)
    X2 = np.conj(Mh - Nh) / np.sqrt(2.0)
    b_abs = np.abs(state.bs[p - 1] * P[p - 1, :nev2])
    rho = float(np.linalg.norm(state.M[:, p]))
    resid_est = rho * b_abs
    scale = np.sqrt(np.sum(np.abs(X1) ** 2, axis=0) + np.sum(np.abs(X2) ** 2, axis=0))
    safe = np.where(scale > 0, scale, 1.0)
    X1 = X1 / safe
    X2 = X2 / safe
    return lam, X1, X2, resid_est, scale, rho, b_abs


def solve(op, cfg, progress=None):
    """Run the restarted bidiagonal-form solver; see the UV variant driver."""
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
                               np.abs(state.bs[p - 1] * factor[2][p - 1, :4]))
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
