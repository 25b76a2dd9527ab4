"""Test-instance factories and block matrix file exchange.

The synthetic family used throughout the test suite is a pair of Toeplitz
blocks: a pentadiagonal Hermitian R and a tridiagonal complex-symmetric C.
Random definite instances are generated from a fixed, portable counter-based
generator (SplitMix64) so that a given seed produces bit-identical matrices
on every platform and run; numpy's Generator is deliberately not used here.

Blocks are exchanged on disk in the Matrix Market text format (coordinate
for sparse, array for dense, complex field, hermitian/symmetric/general
symmetry tags), written with 17 significant digits so round trips are exact.
"""

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import MatrixIOError
from .operators import BseOperator

__all__ = [
    "PentadiagSpec",
    "gen_pentadiag",
    "gen_random_definite",
    "splitmix64",
    "random_complex_normal",
    "read_blocks",
    "write_blocks",
]

# default Toeplitz coefficients for the pentadiagonal family
PENTA_A = -0.1 + 0.2j
PENTA_B = 1.0 + 0.5j
PENTA_C = 4.5
PENTA_D = 2.0 + 0.2j


class PentadiagSpec:
    """Coefficients of the pentadiagonal/tridiagonal Toeplitz block pair.

    R = pentadiag(a, b, c, conj(b), conj(a)) listed from the second
    subdiagonal up to the second superdiagonal, and C = tridiag(b, d, b).
    c must be real so that R is Hermitian by construction.
    """

    def __init__(self, n, a=PENTA_A, b=PENTA_B, c=PENTA_C, d=PENTA_D):
        if n < 3:
            raise ValueError("pentadiagonal family needs n >= 3")
        if np.imag(c) != 0.0:
            raise ValueError("diagonal coefficient c must be real")
        self.n = n
        self.a = complex(a)
        self.b = complex(b)
        self.c = float(np.real(c))
        self.d = complex(d)


def gen_pentadiag(spec):
    """Build the sparse operator for a PentadiagSpec (or a plain size n)."""
    if not isinstance(spec, PentadiagSpec):
        spec = PentadiagSpec(int(spec))
    n, a, b, c, d = spec.n, spec.a, spec.b, spec.c, spec.d
    R = sp.diags_array(
        [np.full(n - 2, a), np.full(n - 1, b), np.full(n, c),
         np.full(n - 1, np.conj(b)), np.full(n - 2, np.conj(a))],
        offsets=[-2, -1, 0, 1, 2], format="csr")
    C = sp.diags_array(
        [np.full(n - 1, b), np.full(n, d), np.full(n - 1, b)],
        offsets=[-1, 0, 1], format="csr")
    return BseOperator(R, C)


_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed, count):
    """First ``count`` outputs of the SplitMix64 sequence for ``seed``.

    SplitMix64 advances its state by a fixed odd constant and applies a
    bijective finalizer, which makes the whole stream a pure function of
    (seed, index) and therefore trivially vectorizable and portable.
    """
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _SM64_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _SM64_M1
    z = (z ^ (z >> np.uint64(27))) * _SM64_M2
    return z ^ (z >> np.uint64(31))


def _uniform01(seed, count):
    # 53-bit mantissa fill, uniform in [0, 1)
    return (splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def random_complex_normal(shape, seed):
    """Standard complex normal array from the SplitMix64 stream (Box-Muller)."""
    m = int(np.prod(shape))
    u = _uniform01(seed, 2 * m)
    u1 = np.maximum(u[:m], 2.0 ** -53)
    u2 = u[m:]
    radius = np.sqrt(-2.0 * np.log(u1))
    re = radius * np.cos(2.0 * np.pi * u2)
    im = radius * np.sin(2.0 * np.pi * u2)
    return ((re + 1j * im) / np.sqrt(2.0)).reshape(shape)


def gen_random_definite(n, seed=0, margin=0.5):
    """Seeded random definite instance with coupling strength ``margin``.

    R = A A^H + shift*I is made strictly diagonally dominant so its smallest
    Gershgorin bound is at least one, and C is a random complex-symmetric
    block scaled to margin times that bound.  For margin < 1 definiteness of
    the sign-stripped companion is then guaranteed; margin >= 1 requests an
    indefinite instance (used as a negative control) and the coupling is
    grown until the companion actually turns indefinite.
    """
    if n < 1:
        raise ValueError("n must be positive")
    A = random_complex_normal((n, n), seed)
    G = A @ A.conj().T
    G = (G + G.conj().T) / 2.0  # exact Hermitian symmetrization
    radius = np.sum(np.abs(G), axis=1) - np.abs(np.diag(G))
    shift = max(0.0, float(np.max(radius - np.real(np.diag(G))))) + 1.0
    R = G + shift * np.eye(n)
    bound = float(np.min(np.real(np.diag(R)) - radius))
    B = random_complex_normal((n, n), seed + 1)
    C = (B + B.T) / 2.0
    cnorm = np.linalg.norm(C, 2) if n > 1 else abs(C[0, 0])
    C = C * (margin * bound / cnorm)
    if margin >= 1.0:
        # negative control: keep growing the coupling until indefinite
        for _ in range(60):
            hhat = np.block([[R, C], [np.conj(C), np.conj(R)]])
            if np.linalg.eigvalsh(hhat)[0] < 0.0:
                break
            C = C * 2.0
        C = (C + C.T) / 2.0
    return BseOperator(R, C)


_SYMMETRY = {"R": "hermitian", "C": "symmetric"}


def write_blocks(op, path_r, path_c, comment=""):
    """Write the two blocks in Matrix Market format (exact round trip)."""
    for mat, path, symmetry in ((op.R, path_r, "hermitian"),
                                (op.C, path_c, "symmetric")):
        scipy.io.mmwrite(path, mat, comment=comment, field="complex",
                         precision=17, symmetry=symmetry)


def _check_symmetry(mat, conjugate, path):
    """Validate explicitly stored halves; exact equality is required."""
    other = mat.conj().T if conjugate else mat.T
    kind = "Hermitian" if conjugate else "symmetric"
    if sp.issparse(mat):
        diff = (mat - other).tocoo()
        if diff.nnz and np.max(np.abs(diff.data)) > 0.0:
            worst = int(np.argmax(np.abs(diff.data)))
            i, j = int(diff.coords[0][worst]), int(diff.coords[1][worst])
            raise MatrixIOError(
                f"{path}: {kind} violation at entry ({i + 1}, {j + 1}), "
                f"max deviation {np.max(np.abs(diff.data)):.3e}")
    else:
        diff = np.abs(mat - other)
        if diff.size and np.max(diff) > 0.0:
            i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
            raise MatrixIOError(
                f"{path}: {kind} violation at entry ({i + 1}, {j + 1}), "
                f"max deviation {np.max(diff):.3e}")


def _read_one(path):
    try:
        mat = scipy.io.mmread(path)
    except Exception as exc:
        raise MatrixIOError(f"{path}: {exc}") from exc
    if sp.issparse(mat):
        return sp.csr_array(mat)
    return np.asarray(mat)


def read_blocks(path_r, path_c):
    """Read the two blocks, validating symmetry and matching dimensions.

    Files with hermitian/symmetric tags expand to exactly symmetric storage;
    general-tag files must store both halves consistently (tolerance zero),
    and a violation is reported with the offending one-based entry index.
    """
    R = _read_one(path_r)
    C = _read_one(path_c)
    if R.shape[0] != R.shape[1]:
        raise MatrixIOError(f"{path_r}: block must be square, got {R.shape}")
    if C.shape[0] != C.shape[1]:
        raise MatrixIOError(f"{path_c}: block must be square, got {C.shape}")
    if R.shape != C.shape:
        raise MatrixIOError(
            f"dimension mismatch: {path_r} is {R.shape}, {path_c} is {C.shape}")
    _check_symmetry(R, True, path_r)
    _check_symmetry(C, False, path_c)
    return BseOperator(R, C, validate=False)
