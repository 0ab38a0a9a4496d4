"""Seeded generation of cone points, positive operators, and the gap study
between the PSD certificate and the exact oracle."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .cones import DEFAULT_TOL, ConeDims, Tolerances
from .posop import Operator, exact_oracle, lambda_search, necessary_checks
from .sampling import (
    MODES,
    RngLike,
    RngStream,
    as_generator,
    sample_L,
    sample_L_batch,
    sample_M,
    sample_M_batch,
    unit_vectors,
)

__all__ = [
    "GAP_HEADER", "GapSummary", "MODES", "OPERATOR_KINDS", "RngLike", "RngStream", "as_generator",
    "gap_csv", "gap_study", "make_positive_operator", "random_orthogonal", "sample_L",
    "sample_L_batch", "sample_M", "sample_M_batch", "sample_operator", "unit_vectors",
]

OPERATOR_KINDS = ("positive", "balanced", "perturbed", "gaussian")


def random_orthogonal(n: int, rng: RngLike) -> np.ndarray:
    g = as_generator(rng)
    Qm, R = np.linalg.qr(g.standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Qm * signs


def make_positive_operator(dims: ConeDims, rng: RngLike, balanced: bool = False) -> Operator:
    """blkdiag(P, Q) with P >= 0 entrywise, column sums of P >= 1, and ||Q||_2 <= 1.

    With ``balanced`` every column of P has the same sum; such operators are
    also certified by the PSD test (A^T J A - lambda J is then PSD for lambda
    between ||Q||^2 and the squared column sum).
    """
    g = as_generator(rng)
    p, q = dims.p, dims.q
    P = g.random((p, p)) * (g.random((p, p)) >= 0.3)
    empty = P.sum(axis=0) == 0.0
    P[g.integers(0, p, size=int(empty.sum())), np.nonzero(empty)[0]] = 1.0
    if balanced:
        targets = np.full(p, 1.0 + 0.5 * abs(g.standard_normal()))
    else:
        targets = 1.0 + 0.5 * np.abs(g.standard_normal(p))
    P = P * (targets / P.sum(axis=0))
    Q = g.random() * random_orthogonal(q, g)
    return Operator.blkdiag(P, Q)


def sample_operator(dims: ConeDims, rng: RngLike, kind: str = "perturbed",
                    scale: float = 0.1) -> Operator:
    """Random operator of the requested family.

    positive / balanced: constructed positive operators; perturbed: one of
    those plus ``scale`` times Gaussian noise; gaussian: i.i.d. standard normal.
    """
    g = as_generator(rng)
    if kind == "positive":
        return make_positive_operator(dims, g)
    if kind == "balanced":
        return make_positive_operator(dims, g, balanced=True)
    if kind == "perturbed":
        base = make_positive_operator(dims, g, balanced=bool(g.random() < 0.5))
        return Operator(dims, base.matrix + scale * g.standard_normal((dims.n, dims.n)))
    if kind == "gaussian":
        return Operator(dims, g.standard_normal((dims.n, dims.n)))
    raise ValueError(f"kind must be one of {OPERATOR_KINDS}, got {kind!r}")


@dataclass
class GapSummary:
    dims_p: int
    dims_q: int
    n_trials: int = 0
    oracle_positive: int = 0
    thm3_certified: int = 0
    refuted_necessary: int = 0
    refuted_oracle_only: int = 0


GAP_HEADER = ("dims_p", "dims_q", "n_trials", "oracle_positive", "thm3_certified",
              "refuted_necessary", "refuted_oracle_only")


def gap_study(dims: ConeDims, n_trials: int, rng: RngLike, perturbation: float = 0.1,
              tol: Tolerances = DEFAULT_TOL) -> GapSummary:
    """Classify perturbed constructed operators by which test settles them.

    ``thm3_certified`` counts operators accepted by the PSD certificate plus
    rows-in-L; ``refuted_oracle_only`` counts those that pass every
    closed-form necessary check yet fail the exact oracle.
    """
    g = as_generator(rng)
    out = GapSummary(dims.p, dims.q, n_trials)
    for _ in range(n_trials):
        base = make_positive_operator(dims, g, balanced=bool(g.random() < 0.5))
        A = Operator(dims, base.matrix + perturbation * g.standard_normal((dims.n, dims.n)))
        checks, refutation = necessary_checks(A, tol)
        oracle_ok = exact_oracle(A, tol).positive
        out.oracle_positive += oracle_ok
        if checks[0].passed and lambda_search(A, tol).feasible:
            out.thm3_certified += 1
        if refutation is not None:
            out.refuted_necessary += 1
        elif not oracle_ok:
            out.refuted_oracle_only += 1
    return out


def gap_csv(rows: Iterable[GapSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GAP_HEADER)
    for r in rows:
        d = asdict(r)
        writer.writerow([d[k] for k in GAP_HEADER])
    return buf.getvalue()
