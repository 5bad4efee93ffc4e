"""Dense real-matrix utilities used throughout the toolkit.

All functions accept anything `np.asarray` understands and validate on entry:
no NaN/Inf ever passes a public constructor, symmetric inputs are checked and
re-symmetrized. The numerical-rank convention is `tol = 1e-9 * sigma_max`.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from pecsynth.errors import (
    DimensionMismatch,
    NonFinite,
    NotObservable,
    NotPositiveDefinite,
    NotSymmetric,
)

RANK_RTOL = 1e-9


def as_matrix(a, name="matrix") -> np.ndarray:
    """Validate and return a 2-D float array with finite entries."""
    M = np.asarray(a, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={M.ndim}")
    if M.size and not np.all(np.isfinite(M)):
        raise NonFinite(f"{name} contains non-finite entries")
    return M


def sym(a, tol=1e-10, name="matrix") -> np.ndarray:
    """Validate symmetry to `tol * (1 + max|M|)` and return the symmetrized matrix."""
    M = as_matrix(a, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    scale = 1.0 + (np.abs(M).max() if M.size else 0.0)
    if M.size and np.abs(M - M.T).max() > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric within {tol} relative")
    return 0.5 * (M + M.T)


def rank(M, tol=None) -> int:
    """Numerical rank from singular values; default tol is 1e-9 * sigma_max."""
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = RANK_RTOL * s[0] if s[0] > 0 else RANK_RTOL
    return int(np.sum(s > tol))


def left_null_basis(M, tol=None) -> np.ndarray:
    """Orthonormal columns spanning {z : z^T M = 0}.

    Returns an (m, m - rank(M)) array for an m x n input; zero columns when
    the left null space is trivial.
    """
    M = as_matrix(M)
    m = M.shape[0]
    if M.shape[1] == 0:
        return np.eye(m)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    if tol is None:
        tol = RANK_RTOL * s[0] if s.size and s[0] > 0 else RANK_RTOL
    r = int(np.sum(s > tol))
    return U[:, r:]


def pinv(M) -> np.ndarray:
    """Moore-Penrose pseudoinverse."""
    return np.linalg.pinv(as_matrix(M))


def is_hurwitz(M, margin=0.0) -> bool:
    """True iff every eigenvalue has real part < -margin."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {M.shape}")
    if M.size == 0:
        return True
    return bool(np.max(np.linalg.eigvals(M).real) < -margin)


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of a symmetric matrix (exact symmetric solver)."""
    S = sym(M)
    if S.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(S)[0])


def observability_matrix(A, C) -> np.ndarray:
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def is_observable(A, C, tol=1e-9) -> bool:
    A = as_matrix(A, "A")
    O = observability_matrix(A, C)
    s = np.linalg.svd(O, compute_uv=False)
    thresh = tol * s[0] if s.size and s[0] > 0 else tol
    return int(np.sum(s > thresh)) == A.shape[0]


def is_stabilizable(A, B, tol=1e-9) -> bool:
    """PBH test: [A - lambda I, B] full row rank at every unstable eigenvalue."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real < 0:
            continue
        Mtx = np.hstack([A - lam * np.eye(n), B.astype(complex)])
        s = np.linalg.svd(Mtx, compute_uv=False)
        if np.sum(s > tol * max(s[0], 1.0)) < n:
            return False
    return True


def is_detectable(A, C, tol=1e-9) -> bool:
    """PBH test on the dual pair."""
    return is_stabilizable(as_matrix(A, "A").T, as_matrix(C, "C").T, tol)


def place_observer_gain(A, C, poles) -> np.ndarray:
    """Observer gain L with eig(A - LC) at the requested real poles.

    Square invertible C uses the diagonal assignment L = (A - diag(poles)) C^-1,
    which keeps the case-study gain canonical; otherwise the dual state-feedback
    placement does the work. Complex poles are out of scope.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    n = A.shape[0]
    poles = np.asarray(poles, dtype=float)
    if poles.ndim != 1 or poles.size != n:
        raise DimensionMismatch(f"need {n} poles, got {poles.size}")
    if not is_observable(A, C):
        raise NotObservable("(A, C) observability matrix is rank deficient")
    if C.shape[0] == C.shape[1] and rank(C) == n:
        return (A - np.diag(poles)) @ np.linalg.inv(C)
    res = signal.place_poles(A.T, C.T, np.sort(poles))
    return res.gain_matrix.T


def logdet_pd(M) -> float:
    """log det of a symmetric positive definite matrix."""
    S = sym(M)
    sign, ld = np.linalg.slogdet(S)
    if sign <= 0:
        raise NotPositiveDefinite("log det requires a positive definite matrix")
    return float(ld)
