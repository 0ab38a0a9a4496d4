"""Dense numerical kernels: symmetric eigenproblems, PSD tests, expm, and the
equality-constrained trust-region subproblem (TRS) on the unit sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_SYM_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ExpmOverflowError(OverflowError):
    pass


def as_symmetric(S) -> np.ndarray:
    """Validate a square finite matrix and return (S + S^T) / 2.

    Raises if S is visibly nonsymmetric (beyond 1e-12 relative).
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and np.max(np.abs(S - S.T)) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (S + S.T)


def sym_eigen(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    S = as_symmetric(S)
    w, V = np.linalg.eigh(S)
    return w[::-1].copy(), V[:, ::-1].copy()


def min_eigenvalue(S) -> float:
    S = as_symmetric(S)
    return float(np.linalg.eigvalsh(S)[0])


def is_psd(S, abs_tol: float = 1e-9) -> bool:
    return min_eigenvalue(S) >= -abs_tol


def numerical_rank(A, rel: float = 1e-8) -> int:
    """Number of singular values above rel * sigma_max, from the eigenvalues of A^T A."""
    A = np.asarray(A, dtype=float)
    w = np.linalg.eigvalsh(A.T @ A)
    sv = np.sqrt(np.clip(w, 0.0, None))
    smax = sv.max() if sv.size else 0.0
    if smax == 0.0:
        return 0
    return int(np.sum(sv > rel * smax))


def maximize_concave(f: Callable[[float], float], lo: float, hi: float,
                     xtol: float = 1e-12, max_iter: int = 300) -> tuple[float, float]:
    """Golden-section search for the maximum of a concave function on [lo, hi].

    Both endpoints are evaluated as well, so a maximum sitting on the boundary
    is returned exactly rather than approached.
    """
    if hi < lo:
        raise ValueError("empty interval")
    best = max(((lo, f(lo)), (hi, f(hi))), key=lambda t: t[1])
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    for cand in ((c, fc), (d, fd)):
        if cand[1] > best[1]:
            best = cand
    return float(best[0]), float(best[1])


# -- matrix exponential ----------------------------------------------------

_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)
_THETA13 = 5.371920351148152
_MAX_SQUARINGS = 64


def expm(A, t: float = 1.0) -> np.ndarray:
    """exp(tA) by scaling and squaring with a fixed degree-13 Pade approximant.

    The number of squarings depends only on ||tA||_1, so results are
    deterministic for a given input.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not (np.all(np.isfinite(A)) and math.isfinite(t)):
        raise ValueError("non-finite input to expm")
    n = A.shape[0]
    M = t * A
    norm1 = float(np.max(np.sum(np.abs(M), axis=0))) if n else 0.0
    if not math.isfinite(norm1):
        raise ExpmOverflowError("||tA|| is not finite")
    if norm1 == 0.0:
        return np.eye(n)
    s = 0 if norm1 <= _THETA13 else int(math.ceil(math.log2(norm1 / _THETA13)))
    if s > _MAX_SQUARINGS:
        raise ExpmOverflowError(f"||tA||_1 = {norm1:g} exceeds the scaling budget")
    M = M / (2.0 ** s)
    b = _PADE13
    ident = np.eye(n)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident)
    with np.errstate(over="ignore", invalid="ignore"):
        R = np.linalg.solve(V - U, V + U)
        for _ in range(s):
            R = R @ R
    if not np.all(np.isfinite(R)):
        raise ExpmOverflowError("exp(tA) overflows double precision")
    return R


# -- trust-region subproblem on the sphere ---------------------------------

@dataclass(frozen=True)
class TRSProblem:
    """minimize u^T Q u + 2 l^T u + c subject to ||u|| = 1."""

    Q: np.ndarray
    l: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        Q = as_symmetric(self.Q)
        l = np.asarray(self.l, dtype=float).reshape(-1)
        if Q.shape[0] != l.size or l.size == 0:
            raise ValueError(f"Q is {Q.shape}, l has {l.size} entries")
        if not (np.all(np.isfinite(l)) and math.isfinite(self.c)):
            raise ValueError("non-finite TRS data")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "c", float(self.c))

    def objective(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.Q @ u + 2.0 * self.l @ u + self.c)


class SphereTRS:
    """TRS solver with the eigendecomposition of Q computed once.

    The optimality system is (Q + sigma I) u = -l with Q + sigma I PSD. In the
    eigenbasis of Q and with the shift s = sigma + w_min >= 0 the constraint
    becomes the secular equation sum_j beta_j^2 / (d_j + s)^2 = 1, where
    d_j = w_j - w_min and beta = V^T l.
    """

    def __init__(self, Q):
        Q = as_symmetric(Q)
        self.Q = Q
        w, V = np.linalg.eigh(Q)
        self.w = w
        self.V = V
        self.d = w - w[0]
        self.scale = max(1.0, float(np.max(np.abs(w))))
        self.bottom = self.d <= 1e-12 * self.scale

    def solve(self, l, c: float = 0.0) -> tuple[float, np.ndarray]:
        l = np.asarray(l, dtype=float).reshape(-1)
        beta = self.V.T @ l
        d = self.d
        scale = max(self.scale, float(np.linalg.norm(l)))
        beta_bottom = float(np.linalg.norm(beta[self.bottom]))
        if beta_bottom <= 1e-13 * scale:
            # l is orthogonal to the bottom eigenspace: drop those terms.
            rest = ~self.bottom
            b = np.where(rest, beta, 0.0)
            y0 = np.zeros_like(b)
            y0[rest] = -b[rest] / d[rest]
            r2 = float(y0 @ y0)
            if r2 <= 1.0:
                # hard case: complete with a bottom eigenvector
                y0[np.argmax(self.bottom)] = math.sqrt(1.0 - r2)
                return self._finish(y0, l, c)
            beta = b
        shift = self._secular_root(beta, d)
        y = -beta / (d + shift)
        return self._finish(y, l, c)

    def _finish(self, y, l, c):
        u = self.V @ y
        u = u / np.linalg.norm(u)
        value = float(u @ self.Q @ u + 2.0 * l @ u + c)
        return value, u

    @staticmethod
    def _secular_root(beta, d) -> float:
        """Root s > 0 of 1/||u(s)|| = 1, ||u(s)||^2 = sum beta^2/(d+s)^2.

        Safeguarded Newton on psi(s) = 1/||u(s)|| - 1, which is increasing and
        concave on s > 0; bisection whenever a step leaves the bracket.
        """
        b2 = beta * beta
        lo, hi = 0.0, float(np.sqrt(b2.sum()))
        if hi == 0.0:
            return 0.0
        s = hi
        for _ in range(200):
            den = d + s
            if np.any(den == 0.0):
                psi = -1.0
                dpsi = 0.0
            else:
                nrm2 = float(np.sum(b2 / den**2))
                nrm = math.sqrt(nrm2)
                psi = 1.0 / nrm - 1.0
                dpsi = float(np.sum(b2 / den**3)) / (nrm2 * nrm)
            if psi == 0.0:
                return s
            if psi < 0.0:
                lo = s
            else:
                hi = s
            if hi - lo <= 1e-13 * hi:
                break
            step_ok = dpsi > 0.0
            if step_ok:
                s_new = s - psi / dpsi
                step_ok = lo < s_new < hi
            s = s_new if step_ok else 0.5 * (lo + hi)
        return hi if s > hi or s < lo else s


def trs_min_on_sphere(prob: TRSProblem) -> tuple[float, np.ndarray]:
    """Global minimum of u^T Q u + 2 l^T u + c over the unit sphere, with a minimizer."""
    return SphereTRS(prob.Q).solve(prob.l, prob.c)
