"""Extended Lorentz cones L(p,q) and M(p,q).

    L(p,q) = {(x,u) : x_k >= ||u|| for every k}
    M(p,q) = {(x,u) : x >= 0, sum(x) >= ||u||}

The two cones are mutually dual and coincide (as the ordinary Lorentz cone)
when p = 1.  All predicates are closed with a one-sided slack of ``abs_tol``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector or matrix does not conform to a ConeDims."""


@dataclass(frozen=True)
class ConeDims:
    p: int
    q: int

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if v < 1:
                raise DimensionError(f"{name} must be >= 1, got {v}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def e(self) -> np.ndarray:
        return np.ones(self.p)


@dataclass(frozen=True)
class Tolerances:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    sphere_resolution: int = 4096

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)
        if int(self.sphere_resolution) < 1:
            raise ValueError("sphere_resolution must be positive")

    def close(self, a: float, b: float) -> bool:
        """Symmetric comparison used when two routes compute the same number."""
        return abs(a - b) <= self.abs_tol + self.rel_tol * max(abs(a), abs(b))


DEFAULT_TOL = Tolerances()


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PointPQ:
    """A vector z = (x, u) of R^p x R^q."""

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "u", _frozen(self.u))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.u))):
            raise ValueError("point has non-finite entries")

    @classmethod
    def from_flat(cls, z, dims: ConeDims) -> "PointPQ":
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size != dims.n:
            raise DimensionError(f"expected {dims.n} entries for {dims}, got {z.size}")
        return cls(z[: dims.p], z[dims.p:])

    @property
    def dims(self) -> ConeDims:
        return ConeDims(self.x.size, self.u.size)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    def __eq__(self, other):
        if not isinstance(other, PointPQ):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.u, other.u)

    def __hash__(self):
        return hash((self.x.tobytes(), self.u.tobytes()))

    def scaled(self, c: float) -> "PointPQ":
        return PointPQ(c * self.x, c * self.u)

    def __add__(self, other: "PointPQ") -> "PointPQ":
        return PointPQ(self.x + other.x, self.u + other.u)

    def to_json(self) -> dict:
        return {"p": int(self.x.size), "q": int(self.u.size),
                "x": [float(v) for v in self.x], "u": [float(v) for v in self.u]}

    @classmethod
    def from_json(cls, obj: dict) -> "PointPQ":
        try:
            dims = ConeDims(obj["p"], obj["q"])
            x, u = obj["x"], obj["u"]
        except KeyError as exc:
            raise ValueError(f"point JSON missing key {exc}") from None
        if len(x) != dims.p or len(u) != dims.q:
            raise DimensionError(f"point JSON lengths ({len(x)}, {len(u)}) do not match {dims}")
        return cls(x, u)


def _check(z: PointPQ, dims: ConeDims) -> None:
    if z.x.size != dims.p or z.u.size != dims.q:
        raise DimensionError(f"point of shape ({z.x.size}, {z.u.size}) does not conform to {dims}")


def build_J(dims: ConeDims) -> np.ndarray:
    """Characteristic matrix [[E, 0], [0, -I]] with E the p x p all-ones block."""
    J = np.zeros((dims.n, dims.n))
    J[: dims.p, : dims.p] = 1.0
    J[dims.p:, dims.p:] = -np.eye(dims.q)
    J.flags.writeable = False
    return J


# Slacks: a point is in the cone iff its slack is >= 0. Membership predicates
# compare the slack against -abs_tol.

def slack_L(z: PointPQ, dims: ConeDims) -> float:
    _check(z, dims)
    return float(np.min(z.x) - np.linalg.norm(z.u))


def slack_M(z: PointPQ, dims: ConeDims) -> float:
    _check(z, dims)
    return float(min(np.min(z.x), np.sum(z.x) - np.linalg.norm(z.u)))


def slack_L_batch(Z: np.ndarray, dims: ConeDims) -> np.ndarray:
    """Row-wise L-slack of an (N, p+q) array."""
    Z = np.atleast_2d(Z)
    if Z.shape[1] != dims.n:
        raise DimensionError(f"expected rows of length {dims.n}, got {Z.shape[1]}")
    return Z[:, : dims.p].min(axis=1) - np.linalg.norm(Z[:, dims.p:], axis=1)


def slack_M_batch(Z: np.ndarray, dims: ConeDims) -> np.ndarray:
    """Row-wise M-slack of an (N, p+q) array."""
    Z = np.atleast_2d(Z)
    if Z.shape[1] != dims.n:
        raise DimensionError(f"expected rows of length {dims.n}, got {Z.shape[1]}")
    X = Z[:, : dims.p]
    return np.minimum(X.min(axis=1), X.sum(axis=1) - np.linalg.norm(Z[:, dims.p:], axis=1))


def in_L(z: PointPQ, dims: ConeDims, tol: Tolerances = DEFAULT_TOL) -> bool:
    return slack_L(z, dims) >= -tol.abs_tol


def in_M(z: PointPQ, dims: ConeDims, tol: Tolerances = DEFAULT_TOL) -> bool:
    return slack_M(z, dims) >= -tol.abs_tol


def quadratic_form(z: PointPQ, dims: ConeDims) -> float:
    """z^T J z evaluated as (sum x)^2 - ||u||^2, without forming J."""
    _check(z, dims)
    return float(np.sum(z.x) ** 2 - z.u @ z.u)


def in_M_quadratic(z: PointPQ, dims: ConeDims, tol: Tolerances = DEFAULT_TOL) -> bool:
    """M-membership through the quadratic form: z^T J z >= 0 and x >= 0."""
    return quadratic_form(z, dims) >= -tol.abs_tol and bool(np.all(z.x >= -tol.abs_tol))


def dual_pairing(zL: PointPQ, zM: PointPQ, dims: ConeDims) -> float:
    _check(zL, dims)
    _check(zM, dims)
    return float(zL.x @ zM.x + zL.u @ zM.u)


# -- serialization ---------------------------------------------------------

def format_float(v: float) -> str:
    # repr is the shortest string that round-trips bit-exactly
    return repr(float(v))


def points_to_csv(points: Iterable[PointPQ]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for z in points:
        writer.writerow([format_float(v) for v in z.flat()])
    return buf.getvalue()


class ParseError(ValueError):
    """Malformed input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def iter_csv_rows(text: str) -> Iterator[tuple[int, list[float]]]:
    """Yield (line_number, values) for every non-blank CSV line."""
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"non-numeric entry in {row!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite entry", lineno)
        yield lineno, values


def points_from_csv(text: str, dims: ConeDims) -> list[PointPQ]:
    points = []
    for lineno, values in iter_csv_rows(text):
        if len(values) != dims.n:
            raise ParseError(f"expected {dims.n} values, got {len(values)}", lineno)
        points.append(PointPQ.from_flat(values, dims))
    return points


def points_from_json(text: str) -> list[PointPQ]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    items = obj if isinstance(obj, list) else [obj]
    try:
        return [PointPQ.from_json(item) for item in items]
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc)) from None
