"""Diagnostics for backward products of stochastic matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import ContractViolation, ParameterError
from .weights import as_array, check_stochastic

log = logging.getLogger(__name__)

RENORM_EVERY = 1000
RENORM_LIMIT = 1e-8


def ergodicity_coefficient(A, tol: float = 1e-9) -> float:
    """``1 - min_{i,j} sum_l min(A[i,l], A[j,l])`` for a row-stochastic ``A``.

    Zero for rank-one matrices, one when two rows have disjoint support.
    """
    A = as_array(A)
    check_stochastic(A, "row", tol)
    overlap = np.minimum(A[:, None, :], A[None, :, :]).sum(axis=2)
    return float(min(1.0, max(0.0, 1.0 - overlap.min())))


def row_spread(A: np.ndarray) -> float:
    """Largest column-wise gap between rows; zero iff all rows agree."""
    return float(np.max(A.max(axis=0) - A.min(axis=0)))


def mixing_envelope(n: int, B: int, steps, eta: Optional[float] = None):
    """``2 * sigma**steps`` with ``sigma = (1 - eta**(nB))**(1/(nB))``.

    ``eta`` defaults to 1/n, the smallest nonzero entry of an equal-split
    neighbor matrix.
    """
    eta = 1.0 / n if eta is None else eta
    nb = n * B
    sigma = (1.0 - eta**nb) ** (1.0 / nb)
    return 2.0 * sigma ** np.asarray(steps, dtype=float)


@dataclass(frozen=True)
class ErgodicityDiagnostics:
    k: int
    pi: float
    row_spread: float
    phi_estimate: np.ndarray
    delta_estimate: float
    eta_bound: float


class BackwardProduct:
    """Accumulates ``T_k ... T_s`` by left multiplication.

    ``kind='column'`` accumulates column-stochastic factors; diagnostics are
    then taken on the transpose so they still describe a row-stochastic
    matrix. Every ``RENORM_EVERY`` multiplies the stochastic sums are reset
    to one; the drift removed is logged and must stay below ``RENORM_LIMIT``.
    """

    def __init__(self, n: int, kind: str = "row", B: Optional[int] = None, s: int = 0):
        if kind not in ("row", "column"):
            raise ParameterError(f"unknown product kind {kind!r}")
        self.n = n
        self.kind = kind
        self.B = B
        self.s = s
        self.k = s - 1  # index of the last factor pushed
        self.matrix = np.eye(n)
        self.multiplies = 0
        self.max_renorm = 0.0

    @property
    def row_view(self) -> np.ndarray:
        return self.matrix if self.kind == "row" else self.matrix.T

    def _renormalize(self):
        M = self.row_view
        sums = M.sum(axis=1, keepdims=True)
        drift = float(np.max(np.abs(sums - 1.0)))
        self.max_renorm = max(self.max_renorm, drift)
        log.debug("renormalized backward product at k=%d, drift %.3g", self.k, drift)
        if drift > RENORM_LIMIT:
            raise ContractViolation(f"backward product drifted by {drift:.3g}")
        M /= sums

    def push(self, T) -> None:
        T = as_array(T)
        if self.multiplies and self.multiplies % RENORM_EVERY == 0:
            self._renormalize()
        self.matrix = T @ self.matrix
        self.multiplies += 1
        self.k += 1

    def push_identity(self) -> None:
        self.k += 1

    def diagnostics(self) -> ErgodicityDiagnostics:
        M = self.row_view
        col = M.sum(axis=0)
        eta_bound = (1.0 / self.n) ** (self.n * self.B) if self.B else float("nan")
        return ErgodicityDiagnostics(
            k=self.k + 1,
            pi=ergodicity_coefficient(M, tol=1e-9),
            row_spread=row_spread(M),
            phi_estimate=M.mean(axis=0),
            delta_estimate=float(col.min()),
            eta_bound=eta_bound,
        )


def track_product(matrices: Iterable, s: int = 0, kind: str = "row",
                  B: Optional[int] = None) -> Iterator[ErgodicityDiagnostics]:
    """Yield diagnostics of ``T_k ... T_s`` after each matrix of the stream."""
    product = None
    for T in matrices:
        T = as_array(T)
        if product is None:
            product = BackwardProduct(T.shape[0], kind, B, s)
        check_stochastic(T, kind)
        product.push(T)
        yield product.diagnostics()


def absolute_probability_residual(phi_next, T, phi_curr) -> float:
    """Max-norm of ``phi_next^T T - phi_curr^T``."""
    T = as_array(T)
    phi_next = np.asarray(phi_next, dtype=float)
    phi_curr = np.asarray(phi_curr, dtype=float)
    for v in (phi_next, phi_curr):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ParameterError("absolute probability vectors must be stochastic")
    return float(np.max(np.abs(phi_next @ T - phi_curr)))


def belief_rate_estimate(trajectory, theta, theta_star) -> np.ndarray:
    """Per-agent least-squares slope of ``log(mu(theta) / mu(theta_star))``
    against ``k`` over the trailing half of the recorded points.

    A negative slope means the agent is discarding ``theta`` at that rate
    (nats per iteration).
    """
    ks = np.asarray(trajectory.k, dtype=float)
    if ks.size < 100:
        raise ParameterError("need at least 100 recorded points to estimate a rate")
    hyps = tuple(trajectory.hypotheses)
    if theta == theta_star:
        raise ParameterError("theta and theta_star must differ")
    lb = trajectory.log_beliefs
    ratio = lb[:, :, hyps.index(theta)] - lb[:, :, hyps.index(theta_star)]
    tail = slice(ks.size // 2, None)
    x = ks[tail]
    xc = x - x.mean()
    yc = ratio[tail] - ratio[tail].mean(axis=0)
    return (xc @ yc) / (xc @ xc)
