"""Weight matrices ``T_k = (1 - lam_k) I + lam_k A_k`` and decay-schedule verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ContractViolation, ParameterError
from .graphs import EdgeSet

STOCH_TOL = 1e-12


def as_fraction(x) -> Fraction:
    """Exact-ish rational for decay exponents so that 1/3 * 3 == 1."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x).limit_denominator(10**6)


@dataclass(frozen=True)
class LambdaSchedule:
    """Neighbor-weight decay law.

    ``constant``: lam_k = c with c in (0, 1).
    ``power``: lam_k = c (k+1)^(-rho), c in (0, 1], rho >= 0. The shift by
    one keeps lam_0 finite; lam_0 = c may equal 1 for c = 1.
    ``table``: lam_k = values[k], then the last value held.
    """

    kind: str
    c: float = 1.0
    rho: Fraction = Fraction(0)
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not 0.0 < self.c < 1.0:
                raise ParameterError(f"constant lambda must lie in (0, 1), got {self.c}")
        elif self.kind == "power":
            object.__setattr__(self, "rho", as_fraction(self.rho))
            if not 0.0 < self.c <= 1.0:
                raise ParameterError(f"power-law scale c must lie in (0, 1], got {self.c}")
            if self.rho < 0:
                raise ParameterError("decay exponent rho must be nonnegative")
            if self.rho == 0 and self.c >= 1.0:
                raise ParameterError("rho = 0 with c = 1 is the constant 1, which is excluded")
        elif self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ParameterError("table lambda schedule is empty")
            if any(not 0.0 < v <= 1.0 for v in vals) or any(v >= 1.0 for v in vals[1:]):
                raise ParameterError("table lambdas must lie in (0, 1) (lam_0 may be 1)")
            object.__setattr__(self, "values", vals)
        else:
            raise ParameterError(f"unknown lambda schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, c):
        return cls("constant", c=float(c))

    @classmethod
    def power(cls, rho, c=1.0):
        return cls("power", c=float(c), rho=as_fraction(rho))

    @classmethod
    def table(cls, values):
        return cls("table", values=tuple(values))

    def __call__(self, k: int) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "power":
            return self.c * (k + 1.0) ** (-float(self.rho))
        return self.values[min(k, len(self.values) - 1)]

    def array(self, count: int) -> np.ndarray:
        k = np.arange(count, dtype=float)
        if self.kind == "constant":
            return np.full(count, self.c)
        if self.kind == "power":
            return self.c * (k + 1.0) ** (-float(self.rho))
        vals = np.asarray(self.values)
        return vals[np.minimum(np.arange(count), len(vals) - 1)]

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant c={self.c:g}"
        if self.kind == "power":
            return f"power c={self.c:g} rho={self.rho}"
        return f"table ({len(self.values)} values)"


@dataclass(frozen=True)
class WeightPolicy:
    """Equal-split neighbor weights.

    ``row``: each agent splits its mass over itself and its in-neighbors
    (row-stochastic). ``column``: each sender splits its mass over itself
    and its out-neighbors (column-stochastic). Nonzero entries of ``A_k``
    are at least 1/n, so the lower bound is 1/n and the neighbor share is
    at most 1 - 1/n.
    """

    kind: str = "row"

    def __post_init__(self):
        if self.kind not in ("row", "column"):
            raise ParameterError(f"unknown weight policy {self.kind!r}")

    def a_under(self, n: int) -> float:
        return 1.0 / n

    def a_bar(self, n: int) -> float:
        return 1.0 - 1.0 / n


def neighbor_matrix(edges: EdgeSet, policy: WeightPolicy) -> np.ndarray:
    """The stochastic matrix ``A_k`` for one edge set."""
    n = edges.n
    adj = edges.adjacency() | np.eye(n, dtype=bool)  # adj[j, i]: j -> i
    if policy.kind == "row":
        # row i spreads over closed in-neighborhood {j : j -> i}
        support = adj.T
        return support / support.sum(axis=1, keepdims=True)
    # column j spreads over closed out-neighborhood {i : j -> i}
    support = adj.T
    return support / support.sum(axis=0, keepdims=True)


@dataclass(frozen=True)
class WeightMatrix:
    T: np.ndarray
    k: int
    lam: float
    kind: str = "row"

    @property
    def n(self):
        return self.T.shape[0]


def build_weight_matrix(edges: EdgeSet, lambda_k: float, policy: WeightPolicy = WeightPolicy(), k: int = 0) -> WeightMatrix:
    """``T = (1 - lambda_k) I + lambda_k A`` with equal-split ``A``.

    ``lambda_k = 1`` is accepted (then ``T = A``); it arises only for the
    first step of a unit-scale power law and for pure ``A_k`` chains.
    """
    if not 0.0 < lambda_k <= 1.0:
        raise ParameterError(f"lambda must lie in (0, 1), got {lambda_k!r}")
    n = edges.n
    A = neighbor_matrix(edges, policy)
    T = (1.0 - lambda_k) * np.eye(n) + lambda_k * A
    return WeightMatrix(T, k, float(lambda_k), policy.kind)


def check_stochastic(T: np.ndarray, kind: str = "row", tol: float = 1e-10) -> None:
    if np.any(T < 0):
        raise ContractViolation("weight matrix has negative entries")
    axis = 1 if kind == "row" else 0
    dev = np.max(np.abs(T.sum(axis=axis) - 1.0))
    if dev > tol:
        raise ContractViolation(f"matrix is not {kind}-stochastic (max deviation {dev:.3g})")


LIMIT_CLASSES = ("diverges-to-infinity", "finite-positive", "zero")


@dataclass(frozen=True)
class ScheduleVerdict:
    """Classification of ``k * prod(window lambdas)`` and ``sum_k prod(window lambdas)``.

    ``learning_guaranteed`` is the sufficient condition (limit infinite);
    ``converse_applies`` is the converse condition (limit finite);
    ``ergodic_by_bc`` is divergence of the Borel-Cantelli sum. At the
    boundary (rho B = 1) the first two disagree with the third and both are
    reported.
    """

    B: int
    schedule: str
    limit_classification: str
    bc_sum_classification: str
    empirical: bool = False

    @property
    def learning_guaranteed(self) -> bool:
        return self.limit_classification == "diverges-to-infinity"

    @property
    def converse_applies(self) -> bool:
        return self.limit_classification != "diverges-to-infinity"

    @property
    def ergodic_by_bc(self) -> bool:
        return self.bc_sum_classification == "divergent"

    def as_dict(self) -> dict:
        return {
            "schedule": self.schedule,
            "B": self.B,
            "limit_classification": self.limit_classification,
            "bc_sum_classification": self.bc_sum_classification,
            "learning_guaranteed": self.learning_guaranteed,
            "converse_applies": self.converse_applies,
            "ergodic_by_bc": self.ergodic_by_bc,
            "empirical": self.empirical,
        }

    def to_text(self) -> str:
        lines = [
            f"schedule: {self.schedule}",
            f"window B: {self.B}",
            f"k * window product: {self.limit_classification}",
            f"window-product sum: {self.bc_sum_classification}",
            "learning guaranteed (limit infinite): " + ("yes" if self.learning_guaranteed else "no"),
            "converse condition (limit finite): " + ("yes" if self.converse_applies else "no"),
            "ergodic via infinitely many full windows: " + ("yes" if self.ergodic_by_bc else "no"),
        ]
        if self.empirical:
            lines.append("note: table schedule, classification is empirical over its horizon")
        return "\n".join(lines)

    def to_kv(self) -> str:
        out = []
        for key, val in self.as_dict().items():
            if isinstance(val, bool):
                val = str(val).lower()
            out.append(f"{key}={val}")
        return "\n".join(out)


def classify_schedule(lam: LambdaSchedule, B: int, horizon: Optional[int] = None) -> ScheduleVerdict:
    """Analytic verdict for constant and power-law schedules.

    Window products of a power law behave like k^(-rho B), so the limit of
    k times the product is infinite, finite or zero as rho B is below, at or
    above 1, and the sum of products diverges iff rho B <= 1. Table
    schedules fall back to a log-log slope fit over their horizon.
    """
    if B < 1:
        raise ParameterError("B must be a positive integer")
    if lam.kind == "constant":
        return ScheduleVerdict(B, lam.describe(), "diverges-to-infinity", "divergent")
    if lam.kind == "power":
        rb = lam.rho * B
        if rb < 1:
            limit = "diverges-to-infinity"
        elif rb == 1:
            limit = "finite-positive"
        else:
            limit = "zero"
        bc = "divergent" if rb <= 1 else "convergent"
        return ScheduleVerdict(B, lam.describe(), limit, bc)
    return _classify_table(lam, B, horizon)


def _classify_table(lam: LambdaSchedule, B: int, horizon: Optional[int]) -> ScheduleVerdict:
    count = horizon if horizon is not None else len(lam.values)
    windows = count // B
    if windows < 8:
        raise ParameterError("table schedule too short to classify (need 8 windows)")
    logs = np.log(lam.array(windows * B)).reshape(windows, B).sum(axis=1)
    k = np.arange(1, windows)
    tail = k >= max(1, windows // 4)
    slope = np.polyfit(np.log(k[tail]), logs[1:][tail], 1)[0]
    tol = 0.05
    if slope > -1 + tol:
        limit = "diverges-to-infinity"
    elif slope >= -1 - tol:
        limit = "finite-positive"
    else:
        limit = "zero"
    bc = "divergent" if slope >= -1 - tol else "convergent"
    return ScheduleVerdict(B, lam.describe(), limit, bc, empirical=True)


def as_array(T) -> np.ndarray:
    """Underlying ndarray of a ``WeightMatrix`` or array-like."""
    if isinstance(T, WeightMatrix):
        return T.T
    return np.asarray(T, dtype=float)
