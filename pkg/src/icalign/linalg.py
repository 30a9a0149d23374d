"""
Dense complex linear algebra used by the transceiver algorithms.

Every function accepts arrays with arbitrary leading batch dimensions, i.e.
matrices of shape ``(..., n, m)``. Operations are pure and deterministic for
identical input bits.

Eigenvector phase convention: every returned eigenvector is rotated so that
its largest-magnitude entry is real and positive (first such entry on ties).
"""

from typing import NamedTuple

import numpy as np

from .exceptions import ContractViolation, SingularMatrixError

__all__ = [
    "HermEig",
    "herm",
    "herm_eig",
    "nu_min",
    "nu_max",
    "gen_herm_eig_max",
    "svd",
    "solve_hpd",
    "orthonormalize",
    "inv_sqrtm_hpd",
    "logdet_hpd",
    "TIE_GAP",
]

TIE_GAP = 1e-12
_HERM_RTOL = 1e-10


class HermEig(NamedTuple):
    """Eigendecomposition of a Hermitian matrix.

    Attributes
    ----------
    values : ndarray, shape (..., n)
        Real eigenvalues in ascending order.
    vectors : ndarray, shape (..., n, n)
        Orthonormal eigenvectors stored as columns.
    ties : ndarray of bool, shape (...)
        True where two consecutive eigenvalues are closer than
        ``TIE_GAP * max(1, ||A||_F)``; callers should then treat the
        eigenspace, not individual vectors, as the meaningful output.
    """
    values: np.ndarray
    vectors: np.ndarray
    ties: np.ndarray


def herm(A):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(A, -1, -2))


def _check_finite(A, name):
    if not np.all(np.isfinite(A)):
        raise ContractViolation(f"{name} has non-finite entries")


def _check_square(A, name):
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ContractViolation(f"{name} must be square, got shape {A.shape}")


def _hermitian_part(A, name="A"):
    A = np.asarray(A)
    _check_square(A, name)
    _check_finite(A, name)
    dev = np.linalg.norm(A - herm(A), axis=(-2, -1))
    scale = np.maximum(np.linalg.norm(A, axis=(-2, -1)), np.finfo(float).tiny)
    if np.any(dev > _HERM_RTOL * scale):
        raise ContractViolation(f"{name} is not Hermitian "
                                f"(max relative deviation {np.max(dev / scale):.3g})")
    # round-off from accumulated Gram matrices
    return 0.5 * (A + herm(A))


def _fix_phase(V):
    """Rotate each column of V so its largest-magnitude entry is real > 0."""
    idx = np.argmax(np.abs(V), axis=-2)[..., None, :]
    pivot = np.take_along_axis(V, idx, axis=-2)
    mag = np.abs(pivot)
    phase = np.where(mag > 0, np.conj(pivot) / np.where(mag > 0, mag, 1.0), 1.0)
    return V * phase


def herm_eig(A):
    """Full eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    A : array_like, shape (..., n, n)
        Hermitian within a relative tolerance of 1e-10. The input is
        symmetrized before decomposition.

    Returns
    -------
    HermEig
        Ascending eigenvalues, phase-normalized eigenvectors and a tie flag.

    Raises
    ------
    ContractViolation
        If ``A`` is not square, not finite or not Hermitian.
    """
    A = _hermitian_part(A)
    values, vectors = np.linalg.eigh(A)
    norm = np.linalg.norm(A, axis=(-2, -1))
    if A.shape[-1] > 1:
        gaps = np.min(np.diff(values, axis=-1), axis=-1)
    else:
        gaps = np.full(A.shape[:-2], np.inf)
    ties = gaps < TIE_GAP * np.maximum(1.0, norm)
    # LAPACK already returns e_1..e_n for the zero matrix; pin it explicitly
    zero = (norm == 0)[..., None, None]
    vectors = np.where(zero, np.eye(A.shape[-1]), vectors)
    return HermEig(values, _fix_phase(vectors), ties)


def nu_min(A, r):
    """Columns are the eigenvectors of the ``r`` smallest eigenvalues of A."""
    return herm_eig(A).vectors[..., :r]


def nu_max(A, r):
    """Columns are the eigenvectors of the ``r`` largest eigenvalues of A,
    largest first."""
    return herm_eig(A).vectors[..., ::-1][..., :r]


def _cholesky(B, name):
    B = _hermitian_part(B, name)
    lam_min = np.linalg.eigvalsh(B)[..., 0]
    floor = 1e-12 * np.linalg.norm(B, axis=(-2, -1))
    if np.any(lam_min <= floor):
        raise SingularMatrixError(
            f"{name} is not numerically positive definite "
            f"(min eigenvalue {np.min(lam_min):.3g})", matrix=name)
    return np.linalg.cholesky(B)


def gen_herm_eig_max(A, B):
    """Largest generalized eigenpair of the Hermitian pencil (A, B).

    Solved by whitening with the Cholesky factor ``B = L L*`` and an ordinary
    Hermitian eigendecomposition of ``L^-1 A L^-*``.

    Parameters
    ----------
    A : array_like, shape (..., n, n)
        Hermitian.
    B : array_like, shape (..., n, n)
        Hermitian positive definite.

    Returns
    -------
    value : ndarray, shape (...)
        Largest generalized eigenvalue, i.e. the maximum of
        ``v* A v / v* B v``.
    vector : ndarray, shape (..., n)
        Maximizer with unit Euclidean norm.

    Raises
    ------
    SingularMatrixError
        If ``B`` is numerically singular; ``err.matrix == "B"``.
    """
    A = _hermitian_part(A, "A")
    if np.shape(A) != np.shape(B):
        raise ContractViolation(f"A and B shapes differ: {np.shape(A)} vs {np.shape(B)}")
    L = _cholesky(B, "B")
    X = np.linalg.solve(L, A)
    C = np.linalg.solve(L, herm(X))
    C = 0.5 * (C + herm(C))
    values, vectors = np.linalg.eigh(C)
    y = vectors[..., :, -1:]
    v = np.linalg.solve(herm(L), y)
    v = v / np.linalg.norm(v, axis=-2, keepdims=True)
    return values[..., -1], _fix_phase(v)[..., 0]


def svd(A):
    """Thin singular value decomposition ``A = U diag(s) V*``.

    Returns ``(U, s, V)`` with singular values descending; note ``V`` is
    returned, not ``V*``.
    """
    A = np.asarray(A)
    _check_finite(A, "A")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    return U, s, herm(Vh)


def solve_hpd(B, Y):
    """Solve ``B X = Y`` for Hermitian positive-definite ``B``."""
    L = _cholesky(B, "B")
    Y = np.asarray(Y)
    Z = np.linalg.solve(L, Y)
    return np.linalg.solve(herm(L), Z)


def inv_sqrtm_hpd(B):
    """Hermitian inverse square root of a positive-definite matrix."""
    B = _hermitian_part(B, "B")
    values, vectors = np.linalg.eigh(B)
    floor = 1e-12 * np.linalg.norm(B, axis=(-2, -1))
    if np.any(values[..., 0] <= floor):
        raise SingularMatrixError("B is not numerically positive definite",
                                  matrix="B")
    return (vectors / np.sqrt(values)[..., None, :]) @ herm(vectors)


def logdet_hpd(B):
    """Natural log-determinant of a Hermitian positive-definite matrix via
    Cholesky."""
    B = 0.5 * (np.asarray(B) + herm(B))
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("determinant argument is not positive "
                                  "definite", matrix="B") from exc
    return 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1))), axis=-1)


def orthonormalize(A):
    """Orthonormal basis of the column span of a full-column-rank matrix.

    Uses a QR factorization with the diagonal of R made real positive, so the
    output is unique for a given input.

    Raises
    ------
    ContractViolation
        If ``A`` has more columns than rows or is numerically rank deficient.
    """
    A = np.asarray(A)
    _check_finite(A, "A")
    if A.shape[-2] < A.shape[-1]:
        raise ContractViolation(f"need rows >= cols, got shape {A.shape}")
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    mag = np.abs(d)
    scale = np.max(np.abs(R), axis=(-2, -1))
    if np.any(mag <= 1e-12 * np.maximum(scale, np.finfo(float).tiny)[..., None]):
        raise ContractViolation("input is rank deficient")
    return Q * (d / mag)[..., None, :].conj()
