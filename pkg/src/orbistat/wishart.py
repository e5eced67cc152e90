"""Two-sample Wishart pairs and their (T, C G0, Lambda) reduction.

A pair (W1, W2) of positive definite matrices with distinct roots of
det(W1 - lambda (W1 + W2)) = 0 factors uniquely as

    W1 = T C Lambda C' T',   W2 = T C (I - Lambda) C' T',

with T lower triangular (positive diagonal), C orthogonal modulo column
signs and Lambda the descending eigenvalues of T^-1 W1 T^-t, all in (0, 1).
The linear algebra here (Cholesky, cyclic Jacobi, LQ writing) is
self-contained so convergence and error semantics are exact; the bisection
generalized-eigenvalue oracle is an independent route used for checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NotPositiveDefiniteError",
    "EigengapError",
    "ConvergenceError",
    "WishartParams",
    "WishartDecomposition",
    "NonstandardDecomposition",
    "cholesky",
    "jacobi_eigh",
    "canonicalize_columns",
    "bartlett_sample",
    "decompose",
    "reconstruct",
    "lq_decompose",
    "decompose_nonstandard",
    "is_generalized_permutation",
    "multiplier_identity_check",
    "t_marginal_logpdf",
    "eigenvalues_by_det_bisection",
]


class NotPositiveDefiniteError(ValueError):
    """Cholesky hit a nonpositive pivot; ``index`` is the failing row."""

    def __init__(self, index: int):
        super().__init__(f"matrix is not positive definite (pivot {index})")
        self.index = index


class EigengapError(ValueError):
    """Roots fall outside the sample space (coincident or out of (0,1))."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its sweep budget."""


def _require_symmetric(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def cholesky(M: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T T' = M and positive diagonal."""
    A = _require_symmetric(M)
    p = A.shape[0]
    T = np.zeros_like(A)
    for i in range(p):
        s = A[i, i] - T[i, :i] @ T[i, :i]
        if s <= 0.0 or not math.isfinite(s):
            raise NotPositiveDefiniteError(i)
        T[i, i] = math.sqrt(s)
        for j in range(i + 1, p):
            T[j, i] = (A[j, i] - T[j, :i] @ T[i, :i]) / T[i, i]
    return T


def _solve_lower(T: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Forward substitution: solve T X = B for lower-triangular T."""
    p = T.shape[0]
    X = np.array(B, dtype=float, copy=True)
    if X.ndim == 1:
        X = X[:, None]
        squeeze = True
    else:
        squeeze = False
    for i in range(p):
        X[i] -= T[i, :i] @ X[:i]
        X[i] /= T[i, i]
    return X[:, 0] if squeeze else X


def jacobi_eigh(
    M: np.ndarray, *, off_tol: float = 1e-12, max_sweeps: int = 50
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (Q, lam) with Q Lambda Q' = M and eigenvalues descending.  The
    rotations are accumulated, so Q is orthogonal by construction; the
    iteration stops when the off-diagonal Frobenius norm falls below
    off_tol * max(1, ||M||_F) and raises after max_sweeps otherwise.
    """
    A = _require_symmetric(M)
    p = A.shape[0]
    Q = np.eye(p)
    scale = max(1.0, float(np.linalg.norm(A)))

    def off_norm() -> float:
        return math.sqrt(2.0 * float(np.sum(np.triu(A, 1) ** 2)))

    converged = off_norm() < off_tol * scale
    for _ in range(max_sweeps):
        if converged:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                a_ij = A[i, j]
                if abs(a_ij) < 1e-300:
                    continue
                tau = (A[j, j] - A[i, i]) / (2.0 * a_ij)
                t = math.copysign(1.0, tau) / (
                    abs(tau) + math.sqrt(1.0 + tau * tau)
                )
                cos = 1.0 / math.sqrt(1.0 + t * t)
                sin = t * cos
                rot_i = cos * A[i, :] - sin * A[j, :]
                rot_j = sin * A[i, :] + cos * A[j, :]
                A[i, :], A[j, :] = rot_i, rot_j
                col_i = cos * A[:, i] - sin * A[:, j]
                col_j = sin * A[:, i] + cos * A[:, j]
                A[:, i], A[:, j] = col_i, col_j
                q_i = cos * Q[:, i] - sin * Q[:, j]
                q_j = sin * Q[:, i] + cos * Q[:, j]
                Q[:, i], Q[:, j] = q_i, q_j
        converged = off_norm() < off_tol * scale
    if not converged:
        raise ConvergenceError(
            f"Jacobi sweeps exhausted ({max_sweeps}) without convergence"
        )
    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    return Q[:, order], lam[order]


def canonicalize_columns(C: np.ndarray) -> np.ndarray:
    """Coset representative of C G0: flip signs so each column's
    largest-magnitude entry is positive (ties go to the lowest row)."""
    C = np.array(C, dtype=float, copy=True)
    for j in range(C.shape[1]):
        i = int(np.argmax(np.abs(C[:, j])))
        if C[i, j] < 0.0:
            C[:, j] = -C[:, j]
    return C


@dataclass(frozen=True)
class WishartParams:
    """Shape (a, b) and scale of the two-sample problem; a = n1/2, b = n2/2."""

    p: int
    a: float
    b: float
    sigma: np.ndarray

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("dimension must be >= 1")
        bound = (self.p + 1) / 2.0
        if self.a <= bound or self.b <= bound:
            raise ValueError(f"a and b must exceed (p+1)/2 = {bound}")
        sigma = _require_symmetric(self.sigma)
        cholesky(sigma)  # SPD check
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_dof(
        cls, p: int, n1: float, n2: float, sigma: np.ndarray | None = None
    ) -> "WishartParams":
        if sigma is None:
            sigma = np.eye(p)
        return cls(p=p, a=n1 / 2.0, b=n2 / 2.0, sigma=sigma)


@dataclass(frozen=True)
class WishartDecomposition:
    """The (T, C G0, Lambda) coordinates of a pair (W1, W2)."""

    T: np.ndarray
    C: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True)
class NonstandardDecomposition:
    """(T', C' G0, z') coordinates for a normalizer-transformed cross section."""

    T: np.ndarray
    C: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    P: np.ndarray


def bartlett_sample(
    params: WishartParams, which: int, rng: np.random.Generator
) -> np.ndarray:
    """One W_p(n_i, Sigma) draw via the triangular construction.

    Requires an integer degrees-of-freedom n_i = 2a or 2b with n_i >= p
    (densities accept general real shapes; sampling does not).
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    n_real = 2.0 * (params.a if which == 1 else params.b)
    n = round(n_real)
    if abs(n_real - n) > 1e-9:
        raise ValueError(f"sampling needs integer degrees of freedom, got {n_real}")
    if n < params.p:
        raise ValueError(f"degrees of freedom {n} below dimension {params.p}")
    p = params.p
    A = np.zeros((p, p))
    for i in range(p):
        for j in range(i):
            A[i, j] = rng.standard_normal()
        A[i, i] = math.sqrt(rng.chisquare(n - i))
    L = cholesky(params.sigma)
    LA = L @ A
    return LA @ LA.T


def decompose(
    W1: np.ndarray,
    W2: np.ndarray,
    *,
    eigengap: float = 1e-8,
    recon_tol: float = 1e-9,
) -> WishartDecomposition:
    """Factor (W1, W2) into T, the coset C G0 and descending Lambda.

    Raises where the input leaves the sample space: non-SPD W1 or W1+W2,
    roots outside (0, 1), or an eigenvalue gap below ``eigengap``.
    Reconstruction of both matrices is verified to ``recon_tol`` relative.
    """
    W1 = _require_symmetric(W1)
    W2 = _require_symmetric(W2)
    T = cholesky(W1 + W2)
    Y = _solve_lower(T, W1)           # T^-1 W1
    U = _solve_lower(T, Y.T).T        # T^-1 W1 T^-t
    C, lam = jacobi_eigh(0.5 * (U + U.T))
    if lam[0] >= 1.0 or lam[-1] <= 0.0:
        raise EigengapError(f"roots outside (0, 1): {lam}")
    gaps = lam[:-1] - lam[1:]
    if np.any(gaps <= eigengap):
        raise EigengapError(
            f"eigenvalue gap {gaps.min():.3e} at or below {eigengap:.0e}"
        )
    C = canonicalize_columns(C)
    dec = WishartDecomposition(T=T, C=C, lam=lam)
    R1, R2 = reconstruct(dec)
    scale = max(float(np.abs(W1).max()), float(np.abs(W2).max()), 1e-300)
    err = max(float(np.abs(R1 - W1).max()), float(np.abs(R2 - W2).max())) / scale
    if err > recon_tol:
        raise ConvergenceError(f"reconstruction error {err:.3e} above {recon_tol}")
    return dec


def reconstruct(dec: WishartDecomposition) -> tuple[np.ndarray, np.ndarray]:
    B = dec.T @ dec.C
    W1 = (B * dec.lam) @ B.T
    W2 = (B * (1.0 - dec.lam)) @ B.T
    return W1, W2


def lq_decompose(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Write an invertible M uniquely as T' C' with T' in LT(p), C' orthogonal."""
    M = np.asarray(M, dtype=float)
    try:
        T = cholesky(M @ M.T)
    except NotPositiveDefiniteError:
        raise ValueError("matrix is singular") from None
    C = _solve_lower(T, M)
    if float(np.abs(C @ C.T - np.eye(M.shape[0])).max()) > 1e-10:
        raise ValueError("orthogonal factor drifted; matrix is ill-conditioned")
    return T, C


def is_generalized_permutation(P: np.ndarray, tol: float = 0.0) -> bool:
    """Exactly one nonzero entry in every row and every column."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    nz = np.abs(P) > tol
    return bool(np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


def decompose_nonstandard(
    W1: np.ndarray,
    W2: np.ndarray,
    P_rule: Callable[[np.ndarray], np.ndarray],
    *,
    eigengap: float = 1e-8,
    recon_tol: float = 1e-9,
) -> NonstandardDecomposition:
    """Decompose against the cross section Z' = {(P L P', P (I-L) P')}.

    P_rule maps the eigenvalue vector to an element of the normalizer of
    the sign group (a generalized permutation matrix).  The equivariant
    part becomes B P^-1 with B = T C, rewritten in T' C' form.
    """
    dec = decompose(W1, W2, eigengap=eigengap, recon_tol=recon_tol)
    P = np.asarray(P_rule(dec.lam), dtype=float)
    if not is_generalized_permutation(P):
        raise ValueError("P_rule must produce a generalized permutation matrix")
    B = dec.T @ dec.C
    Tp, Cp = lq_decompose(B @ np.linalg.inv(P))
    Cp = canonicalize_columns(Cp)
    z1 = (P * dec.lam) @ P.T
    z2 = (P * (1.0 - dec.lam)) @ P.T
    R1 = Tp @ Cp @ z1 @ Cp.T @ Tp.T
    R2 = Tp @ Cp @ z2 @ Cp.T @ Tp.T
    scale = max(float(np.abs(W1).max()), float(np.abs(W2).max()), 1e-300)
    err = max(float(np.abs(R1 - W1).max()), float(np.abs(R2 - W2).max())) / scale
    if err > recon_tol:
        raise ConvergenceError(f"reconstruction error {err:.3e} above {recon_tol}")
    return NonstandardDecomposition(T=Tp, C=Cp, z1=z1, z2=z2, P=P)


def _log_density_lambda(params: WishartParams, W1, W2) -> float:
    """Log of the dominating-measure density part, up to Lebesgue factors."""
    half = (params.p + 1) / 2.0
    s1, d1 = np.linalg.slogdet(W1)
    s2, d2 = np.linalg.slogdet(W2)
    if s1 <= 0 or s2 <= 0:
        raise NotPositiveDefiniteError(0)
    return (params.a - half) * d1 + (params.b - half) * d2


def multiplier_identity_check(
    params: WishartParams, W1, W2, B: np.ndarray
) -> float:
    """Residual of the relative-invariance identity under W -> B W B'.

    The algebraic density part must shift by (2(a+b) - 2(p+1)) log|det B|;
    the remaining (det B)^{2(p+1)} is the symmetric-matrix Lebesgue
    Jacobian, which is documented rather than tested here.
    """
    B = np.asarray(B, dtype=float)
    sign, logdet = np.linalg.slogdet(B)
    if sign == 0:
        raise ValueError("B must be invertible")
    before = _log_density_lambda(params, W1, W2)
    after = _log_density_lambda(params, B @ W1 @ B.T, B @ W2 @ B.T)
    expected = (2.0 * (params.a + params.b) - 2.0 * (params.p + 1)) * logdet
    return abs(after - before - expected)


def t_marginal_logpdf(params: WishartParams, T: np.ndarray) -> float:
    """Log density of the equivariant part T' of a decomposed pair.

    The law is (1/c_H) etr(-1/2 Sigma^-1 T T') prod t_ii^(2a+2b-i) dT.  For
    Sigma = I the constant factors into chi-square diagonals
    (t_ii^2 ~ chi2_{2(a+b)-i+1}) and standard-normal off-diagonals; the
    change of variables T = chol(Sigma) S gives the general constant
    exactly as c_H(Sigma) = det(Sigma)^(a+b) c_H(I).
    """
    T = np.asarray(T, dtype=float)
    p = params.p
    scale = max(1.0, float(np.abs(T).max()))
    if T.shape != (p, p) or float(np.abs(np.triu(T, 1)).max()) > 1e-12 * scale:
        raise ValueError("T must be lower triangular of the right size")
    diag = np.diag(T)
    if np.any(diag <= 0.0):
        raise ValueError("T must have a strictly positive diagonal")
    ab2 = 2.0 * (params.a + params.b)
    sigma_inv = np.linalg.inv(params.sigma)
    quad = -0.5 * float(np.trace(sigma_inv @ T @ T.T))
    powers = float(sum((ab2 - i) * math.log(diag[i - 1]) for i in range(1, p + 1)))
    log_ch = _log_c_h(params)
    return quad + powers - log_ch


def _log_c_h(params: WishartParams) -> float:
    p = params.p
    ab2 = 2.0 * (params.a + params.b)
    _, logdet_sigma = np.linalg.slogdet(params.sigma)
    out = (params.a + params.b) * logdet_sigma
    for i in range(1, p + 1):
        k = ab2 - i
        out += 0.5 * (k - 1.0) * math.log(2.0) + math.lgamma(0.5 * (k + 1.0))
    out += 0.25 * p * (p - 1) * math.log(2.0 * math.pi)
    return out


def eigenvalues_by_det_bisection(
    W1: np.ndarray,
    W2: np.ndarray,
    *,
    tol: float = 1e-12,
    initial_grid: int = 4096,
) -> np.ndarray:
    """Roots of det(W1 - lambda (W1 + W2)) in (0, 1), by sign bisection.

    Independent of the Jacobi pipeline; used as the oracle for the
    invariant part.  Returns the p roots in descending order.
    """
    W1 = np.asarray(W1, dtype=float)
    S = W1 + np.asarray(W2, dtype=float)
    p = W1.shape[0]

    def f(lam: float) -> float:
        return float(np.linalg.det(W1 - lam * S))

    grid_n = initial_grid
    while True:
        xs = np.linspace(0.0, 1.0, grid_n + 1)
        vals = np.array([f(x) for x in xs])
        sign_changes = [
            (xs[i], xs[i + 1])
            for i in range(grid_n)
            if vals[i] == 0.0 or (vals[i] > 0) != (vals[i + 1] > 0)
        ]
        if len(sign_changes) >= p:
            break
        grid_n *= 8
        if grid_n > 2**24:
            raise EigengapError("could not isolate p distinct roots in (0, 1)")
    roots = []
    for lo, hi in sign_changes[:p]:
        flo = f(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return np.sort(np.asarray(roots))[::-1]
