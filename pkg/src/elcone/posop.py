"""Positive operators of M(p,q) (and of L(p,q) through the transpose).

A matrix A is a positive operator of a cone C when A C ⊆ C. This module
provides:

* the necessary-condition battery (rows of A in L, columns in M, mixed
  column combinations in M),
* the PSD certificate: lambda >= 0 with A^T J A - lambda J PSD, which
  together with the rows-in-L test proves positivity,
* the p = 1 Lorentz-cone test A^T J A - mu J PSD for Γ(L) ∪ Γ(-L),
* an exact decision procedure over the generators (e_i, u), ||u|| = 1, of
  M(p,q) (see docs/derivations.md), cross-validated by Monte Carlo,
* Lyapunov-like and exp(tA) automorphism checks.

Column indices ``i`` in the public API and in certificates are 1-based, as
they are written in the mathematics.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Sequence, Union

import numpy as np

from .cones import (
    DEFAULT_TOL,
    ConeDims,
    DimensionError,
    PointPQ,
    Tolerances,
    build_J,
    dual_pairing,
    in_L,
    in_M,
    slack_L,
    slack_L_batch,
    slack_M,
    slack_M_batch,
)
from .linalg import SphereTRS, as_symmetric, expm, maximize_concave, numerical_rank
from .sampling import RngLike, RngStream, as_generator, sample_L_batch, sample_M_batch, unit_vectors

logger = logging.getLogger(__name__)

# stream ids for the seeded samplers owned by this module
MC_STREAM = 0x4D43
COMP_STREAM = 0x4350
MIXED_STREAM = 0x4D58

UNIT_TOL = 1e-10
RANK_REL = 1e-8


class NonUnitVectorError(ValueError):
    pass


class Status(str, Enum):
    POSITIVE = "Positive"
    NOT_POSITIVE = "NotPositive"
    UNKNOWN = "Unknown"


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense (p+q) x (p+q) matrix with its 2x2 block split."""

    dims: ConeDims
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.shape != (self.dims.n, self.dims.n):
            raise DimensionError(f"matrix of shape {M.shape} does not match {self.dims}")
        if not np.all(np.isfinite(M)):
            raise ValueError("operator has non-finite entries")
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)

    @classmethod
    def from_blocks(cls, A11, A12, A21, A22) -> "Operator":
        A11, A22 = np.atleast_2d(A11), np.atleast_2d(A22)
        dims = ConeDims(A11.shape[0], A22.shape[0])
        A12 = np.asarray(A12, dtype=float).reshape(dims.p, dims.q)
        A21 = np.asarray(A21, dtype=float).reshape(dims.q, dims.p)
        return cls(dims, np.block([[A11, A12], [A21, A22]]))

    @classmethod
    def blkdiag(cls, P, Q) -> "Operator":
        P, Q = np.atleast_2d(np.asarray(P, dtype=float)), np.atleast_2d(np.asarray(Q, dtype=float))
        return cls.from_blocks(P, np.zeros((P.shape[0], Q.shape[0])),
                               np.zeros((Q.shape[0], P.shape[0])), Q)

    @property
    def A11(self):
        return self.matrix[: self.dims.p, : self.dims.p]

    @property
    def A12(self):
        return self.matrix[: self.dims.p, self.dims.p:]

    @property
    def A21(self):
        return self.matrix[self.dims.p:, : self.dims.p]

    @property
    def A22(self):
        return self.matrix[self.dims.p:, self.dims.p:]

    def __matmul__(self, z: PointPQ) -> PointPQ:
        return PointPQ.from_flat(self.matrix @ z.flat(), self.dims)

    def scaled(self, c: float) -> "Operator":
        return Operator(self.dims, c * self.matrix)

    def __neg__(self) -> "Operator":
        return self.scaled(-1.0)

    @property
    def T(self) -> "Operator":
        return Operator(self.dims, self.matrix.T)

    def ray_image(self, i: int, u) -> PointPQ:
        """A (e_i, u) for a 1-based column index i."""
        p = self.dims.p
        if not 1 <= i <= p:
            raise IndexError(f"column index {i} outside 1..{p}")
        u = np.asarray(u, dtype=float).reshape(self.dims.q)
        return PointPQ.from_flat(self.matrix[:, i - 1] + self.matrix[:, p:] @ u, self.dims)


def as_operator(A: Union[Operator, np.ndarray], dims: Optional[ConeDims] = None) -> Operator:
    if isinstance(A, Operator):
        if dims is not None and dims != A.dims:
            raise DimensionError(f"operator dims {A.dims} != {dims}")
        return A
    if dims is None:
        raise ValueError("dims are required for a raw matrix")
    return Operator(dims, A)


# -- certificates and verdicts ---------------------------------------------

def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, PointPQ):
        return v.to_json()
    if hasattr(v, "to_json"):
        return v.to_json()
    return v


@dataclass(frozen=True)
class LambdaCert:
    lam: float
    min_eigenvalue: float

    def to_json(self):
        return {"type": "lambda", "lambda": float(self.lam), "min_eigenvalue": float(self.min_eigenvalue)}


@dataclass(frozen=True)
class MuCert:
    mu_low: float
    mu_high: float
    mu_best: float
    cone: Optional[str] = None  # "L", "-L" or None when unresolved

    def to_json(self):
        return {"type": "mu", "mu_low": float(self.mu_low), "mu_high": float(self.mu_high),
                "mu_best": float(self.mu_best), "cone": self.cone}


@dataclass(frozen=True, eq=False)
class ExtremeRayWitness:
    """The ray (e_i, u) and its image under ``label``; negative slack refutes positivity."""

    i: int
    u: np.ndarray
    slack: float
    image: PointPQ
    label: str = "A"

    def to_json(self):
        return {"type": "extreme_ray", "operator": self.label, "i": int(self.i),
                "u": [float(v) for v in self.u], "slack": float(self.slack),
                "image": self.image.to_json()}


@dataclass(frozen=True, eq=False)
class PointWitness:
    """A point z of ``cone`` whose image leaves the cone (slack < 0)."""

    z: PointPQ
    image: PointPQ
    slack: float
    cone: str = "M"

    def to_json(self):
        return {"type": "point", "cone": self.cone, "z": self.z.to_json(),
                "image": self.image.to_json(), "slack": float(self.slack)}


@dataclass(frozen=True, eq=False)
class MonteCarloWitness(PointWitness):
    index: int = 0

    def to_json(self):
        return {**super().to_json(), "type": "monte_carlo", "sample_index": int(self.index)}


@dataclass(frozen=True)
class PairWitness:
    """Refutation of membership in Γ(L) ∪ Γ(-L): one witness for A, one for -A."""

    plus: ExtremeRayWitness
    minus: ExtremeRayWitness

    def to_json(self):
        return {"type": "extreme_ray_pair", "plus": self.plus.to_json(), "minus": self.minus.to_json()}


Certificate = Union[LambdaCert, MuCert, ExtremeRayWitness, PointWitness, PairWitness, None]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: Any = None

    def to_json(self):
        return {"name": self.name, "pass": bool(self.passed), "detail": _jsonable(self.detail)}


@dataclass
class Verdict:
    status: Status
    certificate: Certificate = None
    checks: list[CheckResult] = field(default_factory=list)
    slack: Optional[float] = None

    @property
    def positive(self) -> bool:
        return self.status is Status.POSITIVE

    def check(self, name: str) -> Optional[CheckResult]:
        return next((c for c in self.checks if c.name == name), None)

    def to_json(self):
        return {"status": self.status.value,
                "certificate": None if self.certificate is None else self.certificate.to_json(),
                "checks": [c.to_json() for c in self.checks]}


def witness_slack(A: Operator, w: ExtremeRayWitness) -> float:
    """Recompute the M-slack of the witness image from the operator alone."""
    return slack_M(A.ray_image(w.i, w.u), A.dims)


# -- necessary conditions --------------------------------------------------

def row_slacks(A: Operator) -> np.ndarray:
    """L-slack of each of the first p rows: min_j (A11)_kj - ||row k of A12||."""
    return A.A11.min(axis=1) - np.linalg.norm(A.A12, axis=1)


def col_slacks(A: Operator) -> np.ndarray:
    """M-slack of each of the first p columns."""
    return slack_M_batch(A.matrix[:, : A.dims.p].T, A.dims)


def column_sum_slacks(A: Operator) -> np.ndarray:
    """(p, q) array: M-slack of column i plus column p+j."""
    p = A.dims.p
    cols = A.matrix[:, :p].T[:, None, :] + A.matrix[:, p:].T[None, :, :]
    return slack_M_batch(cols.reshape(-1, A.dims.n), A.dims).reshape(p, A.dims.q)


def nc_rows_in_L(A: Operator, tol: Tolerances = DEFAULT_TOL) -> list[bool]:
    return [bool(s >= -tol.abs_tol) for s in row_slacks(A)]


def nc_cols_in_M(A: Operator, tol: Tolerances = DEFAULT_TOL) -> list[bool]:
    return [bool(s >= -tol.abs_tol) for s in col_slacks(A)]


def _unit(u, q: int) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != q:
        raise DimensionError(f"u has {u.size} entries, expected {q}")
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise NonUnitVectorError(f"||u|| = {np.linalg.norm(u)!r} is not 1")
    return u


def nc_mixed_column(A: Operator, i: int, u, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Is column i plus sum_j u_j * column (p+j) in M, for a unit vector u?"""
    u = _unit(u, A.dims.q)
    return in_M(A.ray_image(i, u), A.dims, tol)


def nc_column_sums(A: Operator, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """(p, q) booleans: column i + column p+j in M (the mixed test with u = e_j)."""
    return column_sum_slacks(A) >= -tol.abs_tol


def nc_mixed_column_sampled(A: Operator, n_u: int, rng: RngLike = RngStream(0, MIXED_STREAM),
                            tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Per column i, whether the mixed-column test passes on n_u random unit u."""
    p = A.dims.p
    U = unit_vectors(A.dims.q, n_u, rng)
    ok = np.empty(p, dtype=bool)
    tail = U @ A.matrix[:, p:].T
    for i in range(p):
        ok[i] = bool(np.all(slack_M_batch(A.matrix[:, i] + tail, A.dims) >= -tol.abs_tol))
    return ok


def _worst_row_ray(A: Operator) -> tuple[int, np.ndarray]:
    """(1-based i, unit u) minimizing the smallest x-entry of A(e_i, u)."""
    A11, A12 = A.A11, A.A12
    rs = row_slacks(A)
    k = int(np.argmin(rs))
    i = int(np.argmin(A11[k])) + 1
    return i, _row_minimizer(A12[k], A.dims.q)


def _row_minimizer(b: np.ndarray, q: int) -> np.ndarray:
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        u = np.zeros(q)
        u[0] = 1.0
        return u
    return -b / nb


def _make_witness(A: Operator, i: int, u: np.ndarray, label: str = "A") -> ExtremeRayWitness:
    img = A.ray_image(i, u)
    return ExtremeRayWitness(i, np.array(u, dtype=float), slack_M(img, A.dims), img, label)


def necessary_checks(A: Operator, tol: Tolerances = DEFAULT_TOL) -> tuple[list[CheckResult], Optional[ExtremeRayWitness]]:
    """Rows in L, columns in M, column sums in M; a refuting ray if any fails."""
    dims = A.dims
    rs, cs, ss = row_slacks(A), col_slacks(A), column_sum_slacks(A)
    note = None if dims.p > 1 else "necessary-condition battery is stated for p > 1; run anyway"
    checks = [
        CheckResult("rows_in_L", bool(np.all(rs >= -tol.abs_tol)),
                    {"slacks": rs, **({"note": note} if note else {})}),
        CheckResult("cols_in_M", bool(np.all(cs >= -tol.abs_tol)), {"slacks": cs}),
        CheckResult("column_sums_in_M", bool(np.all(ss >= -tol.abs_tol)), {"slacks": ss}),
    ]
    witness = None
    if not checks[0].passed:
        i, u = _worst_row_ray(A)
        witness = _make_witness(A, i, u)
    elif not checks[1].passed:
        # column i = midpoint of A(e_i, u) and A(e_i, -u); M-slack is concave,
        # so one of the two rays is at least as violated as the column
        i = int(np.argmin(cs)) + 1
        e1 = np.zeros(dims.q)
        e1[0] = 1.0
        witness = min((_make_witness(A, i, e1), _make_witness(A, i, -e1)), key=lambda w: w.slack)
    elif not checks[2].passed:
        i, j = np.unravel_index(int(np.argmin(ss)), ss.shape)
        u = np.zeros(dims.q)
        u[j] = 1.0
        witness = _make_witness(A, int(i) + 1, u)
    return checks, witness


# -- PSD pencil searches ---------------------------------------------------

@dataclass(frozen=True)
class PencilSearch:
    """Result of maximizing f(t) = min_eig(A^T J A - t J) over t in [0, upper]."""

    best: float
    value: float
    upper: float
    feasible: bool
    interval: Optional[tuple[float, float]]


def _pencil_search(A: Operator, tol: Tolerances, with_interval: bool = False) -> PencilSearch:
    dims = A.dims
    J = build_J(dims)
    S0 = as_symmetric(A.matrix.T @ J @ A.matrix)
    # z = (e, 0) has z^T J z = p^2 and gives z^T (S0 - t J) z = (Ae')^T J (Ae') - t p^2,
    # hence feasible t <= (Ae')^T J (Ae') / p^2; the looser /p bound is kept with margin
    ae = A.matrix[:, : dims.p].sum(axis=1)
    qf = float(ae[: dims.p].sum() ** 2 - ae[dims.p:] @ ae[dims.p:])
    upper = max(0.0, qf / dims.p) + 1.0

    def f(t):
        # S0 - tJ is symmetric by construction; skip the per-call validation
        return float(np.linalg.eigvalsh(S0 - t * J)[0])

    best, value = maximize_concave(f, 0.0, upper)
    feasible = value >= -tol.abs_tol
    interval = None
    if feasible and with_interval:
        interval = (_edge(f, 0.0, best, tol.abs_tol, rising=True),
                    _edge(f, best, upper, tol.abs_tol, rising=False))
    return PencilSearch(best, value, upper, feasible, interval)


def _edge(f, a: float, b: float, thresh: float, rising: bool) -> float:
    """Boundary of {f >= -thresh} inside [a, b] for concave f, by bisection."""
    if rising and f(a) >= -thresh:
        return a
    if not rising and f(b) >= -thresh:
        return b
    lo, hi = a, b
    for _ in range(200):
        if hi - lo <= 1e-12 * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        inside = f(mid) >= -thresh
        if rising:
            hi, lo = (mid, lo) if inside else (hi, mid)
        else:
            lo, hi = (mid, hi) if inside else (lo, mid)
    return hi if rising else lo


def lambda_search(A: Operator, tol: Tolerances = DEFAULT_TOL) -> PencilSearch:
    return _pencil_search(A, tol)


def sufficient_lambda(A: Operator, tol: Tolerances = DEFAULT_TOL) -> Optional[float]:
    """lambda >= 0 making A^T J A - lambda J PSD, or None.

    On its own this does not prove positivity; it must be paired with
    ``nc_rows_in_L`` all true.
    """
    res = _pencil_search(as_operator(A), tol)
    return res.best if res.feasible else None


def mu_search(A: Operator, tol: Tolerances = DEFAULT_TOL) -> PencilSearch:
    """Feasibility of A^T J A - mu J PSD for mu >= 0, with the feasible mu interval (p = 1)."""
    A = as_operator(A)
    if A.dims.p != 1:
        raise DimensionError("the Lorentz-cone test needs p = 1")
    return _pencil_search(A, tol, with_interval=True)


def loewy_schneider_p1(A: Operator, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Membership of A in Γ(L) ∪ Γ(-L) for the Lorentz cone L = L(1,q).

    Uses J = diag(1, -1, ..., -1), i.e. the distinguished coordinate first.
    """
    A = as_operator(A)
    search = mu_search(A, tol)
    rank = numerical_rank(A.matrix, RANK_REL)
    detail = {"mu_best": search.best, "min_eigenvalue": search.value, "mu_upper": search.upper,
              "rank": rank}
    if not search.feasible:
        plus, minus = exact_oracle(A, tol), exact_oracle(-A, tol)
        checks = [CheckResult("lorentz_mu", False, detail),
                  CheckResult("oracle_plus", plus.positive, {"slack": plus.slack}),
                  CheckResult("oracle_minus", minus.positive, {"slack": minus.slack})]
        if plus.positive or minus.positive:
            return Verdict(Status.UNKNOWN, None, checks + [CheckResult(
                "consistency", False, "mu-infeasible but the ray oracle accepts A or -A")])
        cert = PairWitness(plus.certificate,
                           replace(minus.certificate, label="-A"))
        return Verdict(Status.NOT_POSITIVE, cert, checks, min(plus.slack, minus.slack))

    lo, hi = search.interval
    if rank <= 1:
        return Verdict(Status.UNKNOWN, MuCert(lo, hi, search.best, None),
                       [CheckResult("lorentz_mu", True, detail),
                        CheckResult("rank_at_least_2", False, {"rank": rank})])
    z = PointPQ.from_flat(np.r_[2.0, np.zeros(A.dims.q)], A.dims)
    img = A @ z
    if in_L(img, A.dims, tol):
        cone = "L"
    elif in_L(img.scaled(-1.0), A.dims, tol):
        cone = "-L"
    else:
        return Verdict(Status.UNKNOWN, MuCert(lo, hi, search.best, None),
                       [CheckResult("lorentz_mu", True, detail),
                        CheckResult("interior_image_sign", False, {"image": img})])
    return Verdict(Status.POSITIVE, MuCert(lo, hi, search.best, cone),
                   [CheckResult("lorentz_mu", True, detail),
                    CheckResult("interior_image_sign", True, {"cone": cone, "image": img})])


# -- exact oracle ----------------------------------------------------------

@dataclass(frozen=True)
class ColumnReport:
    i: int
    row_clause_slack: float
    norm_clause_slack: float
    sum_lower_bound: float  # s_i - ||w||, the minimum of sum(x) over the rays
    trs_value_at_zero: Optional[float]
    slack: float
    u: np.ndarray

    def to_json(self):
        return _jsonable({"i": self.i, "row_clause_slack": self.row_clause_slack,
                          "norm_clause_slack": self.norm_clause_slack,
                          "sum_lower_bound": self.sum_lower_bound,
                          "trs_value_at_zero": self.trs_value_at_zero,
                          "slack": self.slack, "u": self.u})


def _norm_clause(solver: SphereTRS, s_i: float, w: np.ndarray, c_i: np.ndarray, A22: np.ndarray,
                 A22_norm: float) -> tuple[float, np.ndarray]:
    """min over unit u of (s_i + w.u) - ||c_i + A22 u|| and a minimizer.

    Root of h(tau) = min_u (s_i + tau + w.u)^2 - ||c_i + A22 u||^2 over
    [tau_lo, tau_hi]; see docs/derivations.md.
    """
    wn = float(np.linalg.norm(w))
    cn = float(np.linalg.norm(c_i))
    Atc = A22.T @ c_i
    tau_lo = wn - s_i
    tau_hi = cn + A22_norm - s_i + wn
    width = max(1.0, abs(tau_lo), abs(tau_hi))
    tau_hi += 1e-9 * width

    def h(tau):
        a = s_i + tau
        val, u = solver.solve(a * w - Atc, a * a - cn * cn)
        return val, u

    lo, hi = tau_lo, tau_hi
    h_lo, u_lo = h(lo)
    if h_lo >= 0.0:
        return -lo, u_lo
    u_best = u_lo
    tau = hi
    for _ in range(200):
        if hi - lo <= 1e-13 * width:
            break
        val, u = h(tau)
        if val < 0.0:
            lo = tau
        else:
            hi, u_best = tau, u
            if val == 0.0:
                break
        slope = 2.0 * (s_i + tau + w @ u)
        nxt = tau - val / slope if slope > 0.0 else math.nan
        tau = nxt if lo < nxt < hi else 0.5 * (lo + hi)
    return -hi, u_best


def _column_reports(A: Operator) -> list[ColumnReport]:
    dims = A.dims
    A11, A12, A21, A22 = A.A11, A.A12, A.A21, A.A22
    w = A12.sum(axis=0)
    wn = float(np.linalg.norm(w))
    col_sums = A11.sum(axis=0)
    bnorm = np.linalg.norm(A12, axis=1)
    solver = SphereTRS(np.outer(w, w) - A22.T @ A22)
    A22_norm = float(np.linalg.norm(A22, 2))
    reports = []
    for i in range(dims.p):
        s_i, c_i = float(col_sums[i]), A21[:, i]
        r = A11[:, i] - bnorm
        k = int(np.argmin(r))
        u_row = _row_minimizer(A12[k], dims.q)
        m_i, u_norm = _norm_clause(solver, s_i, w, c_i, A22, A22_norm)
        trs0 = None
        if s_i >= wn:
            trs0 = solver.solve(s_i * w - A22.T @ c_i, s_i * s_i - float(c_i @ c_i))[0]
        cands = [(slack_M(A.ray_image(i + 1, u), dims), u) for u in (u_row, u_norm)]
        sl, u = min(cands, key=lambda t: t[0])
        reports.append(ColumnReport(i + 1, float(r[k]), float(m_i), s_i - wn, trs0, sl, u))
    return reports


def exact_oracle(A: Operator, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Decide A M(p,q) ⊆ M(p,q) by minimizing the M-slack over all rays (e_i, u).

    The certificate is the minimizing ray in both outcomes: its slack is
    negative (< -abs_tol) for NotPositive and the smallest achievable value
    otherwise.
    """
    A = as_operator(A)
    reports = _column_reports(A)
    worst = min(reports, key=lambda r: r.slack)
    witness = _make_witness(A, worst.i, worst.u)
    status = Status.POSITIVE if witness.slack >= -tol.abs_tol else Status.NOT_POSITIVE
    check = CheckResult("extreme_ray_oracle", status is Status.POSITIVE,
                        {"slack": witness.slack, "columns": [r.to_json() for r in reports]})
    return Verdict(status, witness, [check], witness.slack)


def oracle_slack_parts(A: Operator) -> dict:
    """Closed-form row slacks and TRS-derived norm slacks that the oracle minimizes over."""
    reports = _column_reports(as_operator(A))
    return {"row": [r.row_clause_slack for r in reports],
            "norm": [r.norm_clause_slack for r in reports],
            "sum_lower_bound": [r.sum_lower_bound for r in reports],
            "trs_value_at_zero": [r.trs_value_at_zero for r in reports]}


def separating_L_point(y: PointPQ, dims: ConeDims) -> PointPQ:
    """s in L with <y, s> = slack_M(y); negative exactly when y is outside M."""
    x, v = y.x, y.u
    k = int(np.argmin(x))
    nv = float(np.linalg.norm(v))
    if x[k] <= x.sum() - nv:
        s_x = np.zeros(dims.p)
        s_x[k] = 1.0
        return PointPQ(s_x, np.zeros(dims.q))
    return PointPQ(np.ones(dims.p), -v / nv if nv > 0 else np.zeros(dims.q))


def transfer_witness(A: Operator, w: ExtremeRayWitness) -> PointWitness:
    """Turn a ray refuting A M ⊆ M into a point of L refuting A^T L ⊆ L.

    With r = (e_i, u) and y = A r outside M, the separating s in L gives
    <r, A^T s> = <y, s> < 0, and since r is in M = L*, A^T s is not in L.
    Its L-slack is at most the ray's M-slack.
    """
    A = as_operator(A)
    s = separating_L_point(A.ray_image(w.i, w.u), A.dims)
    img = A.T @ s
    return PointWitness(s, img, slack_L(img, A.dims), "L")


def exact_oracle_L(B: Operator, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Decide B L(p,q) ⊆ L(p,q) through B^T M(p,q) ⊆ M(p,q)."""
    B = as_operator(B)
    v = exact_oracle(B.T, tol)
    ray = replace(v.certificate, label="B^T")
    checks = [CheckResult("transposed_ray_oracle", v.positive, {"slack": v.slack, "ray": ray})]
    if v.positive:
        return Verdict(Status.POSITIVE, ray, checks, v.slack)
    w = transfer_witness(B.T, v.certificate)
    return Verdict(Status.NOT_POSITIVE, w, checks, w.slack)


# -- sampling-based checks -------------------------------------------------

def monte_carlo_check(A: Operator, n_samples: int = 10_000, seed: int = 0,
                      tol: Tolerances = DEFAULT_TOL, cone: str = "M") -> Optional[MonteCarloWitness]:
    """First sampled z in the cone with A z outside it (slack < -10 abs_tol), if any.

    ``cone`` selects M(p,q) (default) or L(p,q) for both the samples and the test.
    """
    A = as_operator(A)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = RngStream(seed, MC_STREAM)
    if cone == "M":
        Z, slack_fn = sample_M_batch(A.dims, n_samples, rng, "mix"), slack_M_batch
    elif cone == "L":
        Z, slack_fn = sample_L_batch(A.dims, n_samples, rng, "mix"), slack_L_batch
    else:
        raise ValueError(f"cone must be 'M' or 'L', got {cone!r}")
    images = Z @ A.matrix.T
    slacks = slack_fn(images, A.dims)
    bad = np.nonzero(slacks < -10.0 * tol.abs_tol)[0]
    if bad.size == 0:
        return None
    k = int(bad[0])
    return MonteCarloWitness(PointPQ.from_flat(Z[k], A.dims), PointPQ.from_flat(images[k], A.dims),
                             float(slacks[k]), cone, k)


@dataclass(frozen=True)
class CompPair:
    """(z, s) with z in M, s in L and <z, s> = 0."""

    z: PointPQ
    s: PointPQ

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        dims = self.z.dims
        if not in_M(self.z, dims, tol):
            raise ValueError("z is not in M")
        if not in_L(self.s, dims, tol):
            raise ValueError("s is not in L")
        if abs(dual_pairing(self.s, self.z, dims)) > tol.abs_tol:
            raise ValueError("pair is not complementary")


def comp_pairs_batch(dims: ConeDims, n: int, rng: RngLike) -> tuple[np.ndarray, np.ndarray]:
    """n complementarity pairs z = (e_i, u), s = (y, -t u) as two (n, p+q) arrays.

    y >= t e with y_i = t; a quarter of the pairs use t = 0.
    """
    g = as_generator(rng)
    p = dims.p
    idx = g.integers(0, p, size=n)
    U = unit_vectors(dims.q, n, g)
    t = np.abs(g.standard_normal(n))
    t[g.random(n) < 0.25] = 0.0
    Y = t[:, None] + np.abs(g.standard_normal((n, p)))
    rows = np.arange(n)
    Y[rows, idx] = t
    X = np.zeros((n, p))
    X[rows, idx] = 1.0
    return np.hstack([X, U]), np.hstack([Y, -t[:, None] * U])


def sample_comp_pair(dims: ConeDims, seed: Union[int, RngLike] = 0) -> CompPair:
    rng = RngStream(seed, COMP_STREAM) if isinstance(seed, int) else seed
    Z, S = comp_pairs_batch(dims, 1, rng)
    pair = CompPair(PointPQ.from_flat(Z[0], dims), PointPQ.from_flat(S[0], dims))
    pair.validate()
    return pair


def find_lyapunov_violation(A: Operator, n_pairs: int = 1000, seed: int = 0,
                            tol: Tolerances = DEFAULT_TOL) -> Optional[CompPair]:
    A = as_operator(A)
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    Z, S = comp_pairs_batch(A.dims, n_pairs, RngStream(seed, COMP_STREAM))
    vals = np.einsum("ij,ij->i", Z @ A.matrix.T, S)
    bound = tol.abs_tol * (1.0 + np.linalg.norm(A.matrix, 2)) \
        * np.linalg.norm(Z, axis=1) * np.linalg.norm(S, axis=1)
    bad = np.nonzero(np.abs(vals) > bound)[0]
    if bad.size == 0:
        return None
    k = int(bad[0])
    pair = CompPair(PointPQ.from_flat(Z[k], A.dims), PointPQ.from_flat(S[k], A.dims))
    logger.info("Lyapunov-like test refuted: <Az, s> = %r on z=%s s=%s",
                float(vals[k]), pair.z.to_json(), pair.s.to_json())
    return pair


def lyapunov_like_check(A: Operator, n_pairs: int = 1000, seed: int = 0,
                        tol: Tolerances = DEFAULT_TOL) -> bool:
    """Sampled test of <Az, s> = 0 on complementarity pairs of M.

    False is a proof of failure; True is only evidence.
    """
    return find_lyapunov_violation(A, n_pairs, seed, tol) is None


def exp_automorphism_check(A: Operator, t_values: Sequence[float],
                           tol: Tolerances = DEFAULT_TOL) -> list[Verdict]:
    """For each t, whether exp(tA) and exp(-tA) are both positive operators of M."""
    A = as_operator(A)
    out = []
    for t in t_values:
        plus = exact_oracle(Operator(A.dims, expm(A.matrix, t)), tol)
        minus = exact_oracle(Operator(A.dims, expm(A.matrix, -t)), tol)
        checks = [CheckResult("exp_plus_positive", plus.positive, {"t": t, "slack": plus.slack}),
                  CheckResult("exp_minus_positive", minus.positive, {"t": -t, "slack": minus.slack})]
        if plus.positive and minus.positive:
            out.append(Verdict(Status.POSITIVE, None, checks, min(plus.slack, minus.slack)))
            continue
        bad, label = (plus, f"exp({t!r} A)") if not plus.positive else (minus, f"exp({-t!r} A)")
        cert = replace(bad.certificate, label=label)
        out.append(Verdict(Status.NOT_POSITIVE, cert, checks, bad.slack))
    return out


# -- orchestration ---------------------------------------------------------

@dataclass(frozen=True)
class AnalyzeConfig:
    tol: Tolerances = DEFAULT_TOL
    mc_samples: int = 10_000
    seed: int = 0


def analyze(A: Operator, config: AnalyzeConfig = AnalyzeConfig()) -> Verdict:
    """Fast refutations, PSD certificate, exact oracle, then Monte Carlo cross-validation.

    Any disagreement between routes yields Unknown with the diagnostics kept
    in ``checks``.
    """
    A = as_operator(A)
    tol = config.tol
    checks, refutation = necessary_checks(A, tol)
    if refutation is not None:
        return Verdict(Status.NOT_POSITIVE, refutation, checks, refutation.slack)

    lam = lambda_search(A, tol)
    rows_ok = checks[0].passed
    certified = lam.feasible and rows_ok
    checks.append(CheckResult("psd_lambda", certified,
                              {"lambda": lam.best, "min_eigenvalue": lam.value, "upper": lam.upper}))

    oracle = exact_oracle(A, tol)
    checks.extend(oracle.checks)

    mc = monte_carlo_check(A, config.mc_samples, config.seed, tol)
    checks.append(CheckResult("monte_carlo", mc is None,
                              {"samples": config.mc_samples, "seed": config.seed,
                               "witness": None if mc is None else mc.to_json()}))

    if A.dims.p == 1:
        ls = loewy_schneider_p1(A, tol)
        checks.append(CheckResult("lorentz_mu_union", ls.status is not Status.NOT_POSITIVE,
                                  {"status": ls.status.value,
                                   "certificate": None if ls.certificate is None else ls.certificate.to_json()}))
        ls_conflict = (ls.status is Status.POSITIVE and (ls.certificate.cone == "L") != oracle.positive) \
            or (ls.status is Status.NOT_POSITIVE and oracle.positive)
        if ls_conflict:
            checks.append(CheckResult("consistency", False, "Lorentz mu test disagrees with the ray oracle"))
            return Verdict(Status.UNKNOWN, None, checks, oracle.slack)

    problems = []
    if certified and not oracle.positive:
        problems.append("PSD certificate holds but the ray oracle refutes")
    if oracle.positive and mc is not None:
        problems.append("ray oracle accepts but Monte Carlo found a violation")
    if problems:
        checks.append(CheckResult("consistency", False, problems))
        return Verdict(Status.UNKNOWN, None, checks, oracle.slack)

    if not oracle.positive:
        return Verdict(Status.NOT_POSITIVE, oracle.certificate, checks, oracle.slack)
    cert = LambdaCert(lam.best, lam.value) if certified else oracle.certificate
    return Verdict(Status.POSITIVE, cert, checks, oracle.slack)
