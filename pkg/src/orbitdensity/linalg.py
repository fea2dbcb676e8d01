"""Dense complex Hermitian linear algebra.

Everything downstream (Gram matrices, frame operators, Rayleigh quotients)
reduces to Hermitian eigenproblems solved here.  All routines are
deterministic for identical input and use a single relative threshold
``DEFAULT_REL_TOL`` wherever a rank decision has to be made.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateProbeError,
    DimensionError,
    NotPSDError,
    NumericalFailure,
    UsageError,
)

# Relative eigenvalue threshold for every rank / kernel decision.
DEFAULT_REL_TOL = 1e-9

_HERMITICITY_RTOL = 1e-8


def _as_square_complex(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise UsageError("matrix contains non-finite entries")
    return A


def _symmetrized(M) -> np.ndarray:
    """Validate near-Hermitianness and return (M + M*)/2."""
    A = _as_square_complex(M)
    scale = float(np.linalg.norm(A))
    dev = float(np.linalg.norm(A - A.conj().T))
    if scale > 0.0 and dev > _HERMITICITY_RTOL * scale:
        raise UsageError(
            f"matrix is not Hermitian: ||M - M*|| = {dev:.3e} > {_HERMITICITY_RTOL:.0e}*||M||"
        )
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True)
class HermitianSpectrum:
    """Real spectrum of a Hermitian matrix, eigenvalues ascending.

    ``eigenvectors`` holds an orthonormal column system aligned with
    ``eigenvalues``, or ``None`` when only eigenvalues were requested.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None


def hermitian_eigen(M, *, compute_vectors: bool = True) -> HermitianSpectrum:
    """Full spectral decomposition of a (near-)Hermitian matrix.

    The input is symmetrized internally; it must already be Hermitian to
    relative tolerance 1e-8.
    """
    A = _symmetrized(M)
    try:
        if compute_vectors:
            w, V = np.linalg.eigh(A)
        else:
            w = np.linalg.eigvalsh(A)
            V = None
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc
    return HermitianSpectrum(eigenvalues=w, eigenvectors=V)


def _psd_eigen(M, rel_tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigendecompose a PSD matrix and return (w, V, keep mask).

    Eigenvalues at or below ``rel_tol * lambda_max`` count as kernel
    directions; a clearly negative eigenvalue raises ``NotPSDError``.
    """
    if not (0.0 < rel_tol < 1.0):
        raise UsageError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    spec = hermitian_eigen(M)
    w, V = spec.eigenvalues, spec.eigenvectors
    if w.size == 0:
        return w, V, np.zeros(0, dtype=bool)
    lam_max = max(float(w[-1]), 0.0)
    # absolute guard keeps exact-zero matrices and pure roundoff negatives legal
    neg_floor = rel_tol * lam_max + 64.0 * np.finfo(float).eps * float(np.linalg.norm(M))
    if float(w[0]) < -neg_floor:
        raise NotPSDError(
            f"matrix is not PSD: min eigenvalue {w[0]:.6e} < -{neg_floor:.6e}"
        )
    keep = w > rel_tol * lam_max
    return w, V, keep


def numerical_rank(M, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Number of eigenvalues above ``rel_tol * lambda_max``; 0 for the zero matrix."""
    _, _, keep = _psd_eigen(M, rel_tol)
    return int(np.count_nonzero(keep))


def inverse_sqrt_psd(M, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Pseudo inverse square root of a Hermitian PSD matrix.

    Returns R with R @ M @ R equal to the orthogonal projector onto the
    span of eigenvectors whose eigenvalue exceeds ``rel_tol * lambda_max``;
    eigenvalues below that threshold are treated as kernel directions.
    """
    w, V, keep = _psd_eigen(M, rel_tol)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (V * inv) @ V.conj().T


def generalized_rayleigh_extremes(
    N, D, rel_tol: float = DEFAULT_REL_TOL
) -> tuple[float, float]:
    """Extremes of x*Nx / x*Dx over the numerically nondegenerate subspace of D.

    D is rank-filtered at ``rel_tol``; the quotient is whitened with the
    retained eigendirections of D and the extreme eigenvalues of the
    whitened N are returned as (min, max).
    """
    A_N = _symmetrized(N)
    A_D = _symmetrized(D)
    if A_N.shape != A_D.shape:
        raise DimensionError(f"shape mismatch: N is {A_N.shape}, D is {A_D.shape}")
    w, V, keep = _psd_eigen(A_D, rel_tol)
    if not np.any(keep):
        raise DegenerateProbeError("probe Gram matrix is numerically singular in every direction")
    B = V[:, keep] / np.sqrt(w[keep])
    W = B.conj().T @ A_N @ B
    vals = hermitian_eigen(0.5 * (W + W.conj().T), compute_vectors=False).eigenvalues
    return float(vals[0]), float(vals[-1])
