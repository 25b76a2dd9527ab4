"""Brute-force dense reference for the structured solvers.

Assembles the full 2n x 2n matrix and diagonalizes it with a general
unstructured eigensolver on purpose: independence from the structured code
paths is the point of this module.  Sizes are guarded since everything here
is O(n^3) on the doubled dimension.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "DENSE_GUARD",
    "DenseEigenDecomposition",
    "assemble_h",
    "assemble_companion",
    "dense_eig",
    "definiteness_check",
    "match_eigenvalues",
]

DENSE_GUARD = 2048


def _dense_blocks(op):
    if op.n > DENSE_GUARD:
        raise ValueError(
            f"block size {op.n} exceeds the dense assembly guard {DENSE_GUARD}")
    R = op.R.toarray() if op.is_sparse else np.asarray(op.R)
    C = op.C.toarray() if op.is_sparse else np.asarray(op.C)
    return R.astype(np.complex128), C.astype(np.complex128)


def assemble_h(op):
    """Full 2n x 2n matrix [[R, C], [-conj(C), -conj(R)]]."""
    R, C = _dense_blocks(op)
    return np.block([[R, C], [-np.conj(C), -np.conj(R)]])


def assemble_companion(op):
    """Sign-stripped Hermitian companion [[R, C], [conj(C), conj(R)]]."""
    R, C = _dense_blocks(op)
    return np.block([[R, C], [np.conj(C), np.conj(R)]])


class DenseEigenDecomposition:
    """Unstructured eigendecomposition with a definiteness verdict."""

    def __init__(self, values, right_vectors, verdict):
        self.values = values
        self.right_vectors = right_vectors
        self.verdict = verdict

    def positive_sorted(self):
        """Real positive eigenvalues and vectors sorted by magnitude."""
        sel = np.where(self.values.real > 0)[0]
        order = sel[np.argsort(self.values.real[sel])]
        return self.values.real[order], self.right_vectors[:, order]


def _verdict_from_companion(hhat):
    hhat = (hhat + hhat.conj().T) / 2.0
    try:
        scipy.linalg.cholesky(hhat, lower=True)
        return "definite"
    except scipy.linalg.LinAlgError:
        pass
    w = np.linalg.eigvalsh(hhat)
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    if w[0] > -1e-12 * max(wmax, 1.0):
        return "borderline"
    return "indefinite"


def dense_eig(Hd):
    """Complete eigendecomposition of an assembled dense matrix.

    The definiteness verdict is derived from the sign-stripped companion,
    recovered by negating the bottom block rows.
    """
    Hd = np.asarray(Hd)
    if Hd.shape[0] != Hd.shape[1]:
        raise ValueError("dense eigendecomposition needs a square matrix")
    if Hd.shape[0] % 2 != 0:
        raise ValueError("expected an even (doubled) dimension")
    values, vectors = scipy.linalg.eig(Hd)
    n = Hd.shape[0] // 2
    hhat = Hd.copy()
    hhat[n:, :] = -hhat[n:, :]
    return DenseEigenDecomposition(values, vectors, _verdict_from_companion(hhat))


def definiteness_check(op):
    """Verdict for the sign-stripped companion: definite/indefinite/borderline."""
    return _verdict_from_companion(assemble_companion(op))


def match_eigenvalues(computed, reference, rgate=1e-8):
    """Greedy nearest-value pairing of two eigenvalue sets.

    Each computed value is matched to the closest unused reference value;
    returns (matched_reference, relative_errors).  Pairings worse than the
    relative gate raise, which keeps accidental cross-pair matches from
    silently passing equivalence tests.
    """
    computed = np.asarray(computed, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    used = np.zeros(reference.size, dtype=bool)
    matched = np.empty_like(computed)
    relerr = np.empty_like(computed)
    for i, lam in enumerate(computed):
        dist = np.abs(reference - lam)
        dist[used] = np.inf
        jbest = int(np.argmin(dist))
        used[jbest] = True
        matched[i] = reference[jbest]
        denom = max(abs(reference[jbest]), 1e-300)
        relerr[i] = dist[jbest] / denom
        if relerr[i] > rgate:
            raise ValueError(
                f"eigenvalue {lam!r} has no reference match within "
                f"relative gate {rgate:g} (best {relerr[i]:.3e})")
    return matched, relerr
