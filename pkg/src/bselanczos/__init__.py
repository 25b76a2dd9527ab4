"""Structure-preserving thick-restart Lanczos eigensolvers.

Computes extreme eigenvalues with paired right and left eigenvectors of the
definite block-structured eigenproblem defined by a Hermitian block R and a
complex-symmetric block C, through three mathematically equivalent
structured recurrences, without ever forming the doubled matrix.
"""

from . import gruning, projected, shao
from .dense_oracle import (DenseEigenDecomposition, assemble_companion,
                           assemble_h, definiteness_check, dense_eig,
                           match_eigenvalues)
from .errors import (FactorizationError, IndefiniteProblemError,
                     MatrixIOError)
from .instances import (PentadiagSpec, gen_pentadiag, gen_random_definite,
                        random_complex_normal, read_blocks, splitmix64,
                        write_blocks)
from .operators import (BseOperator, PairedBasis, ScalarWorkspace,
                        orthogonality_defect, structured_coeffs_uv)
from .smallmat import (LowerBidiag, SpectralFactor, SymTridiag, bidiag_svd,
                       cholesky_relation_check, svd_dense, symeig_dense,
                       tridiag_eig)
from .solver_common import DEFAULT_SEED, EigResult, RestartRecord, SolverConfig

__version__ = "0.1.0"

SOLVERS = {"shao": shao, "gruning": gruning, "projectedbse": projected}


def solve(op, cfg, method="shao", progress=None):
    """Solve with the named method: one of shao, gruning, projectedbse."""
    try:
        mod = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; pick one of {sorted(SOLVERS)}")
    return mod.solve(op, cfg, progress=progress)


__all__ = [
    "BseOperator", "PairedBasis", "ScalarWorkspace", "SolverConfig",
    "EigResult", "RestartRecord", "DEFAULT_SEED", "SOLVERS", "solve",
    "shao", "gruning", "projected",
    "SymTridiag", "LowerBidiag", "SpectralFactor", "tridiag_eig",
    "bidiag_svd", "symeig_dense", "svd_dense", "cholesky_relation_check",
    "assemble_h", "assemble_companion", "dense_eig", "definiteness_check",
    "match_eigenvalues", "DenseEigenDecomposition",
    "PentadiagSpec", "gen_pentadiag", "gen_random_definite", "read_blocks",
    "write_blocks", "splitmix64", "random_complex_normal",
    "orthogonality_defect", "structured_coeffs_uv",
    "IndefiniteProblemError", "FactorizationError", "MatrixIOError",
]
