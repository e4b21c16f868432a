"""Log-linear belief updates, the push-sum variant, and the simulation loop.

All beliefs are kept as natural logs and renormalized per agent with a
max-shifted log-sum-exp, so runs of millions of steps never underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation, DimensionError, ParameterError
from .graphs import GraphSchedule
from .hypotheses import AgentModel, HypothesisSet, optimal_sets
from .weights import LambdaSchedule, WeightPolicy, as_array, check_stochastic, neighbor_matrix

GENERATOR_ID = "numpy.PCG64 seeded by SeedSequence([seed, agent_index])"


def normalize_log(log_b: np.ndarray) -> np.ndarray:
    return log_b - logsumexp(log_b, axis=-1, keepdims=True)


@dataclass
class Scenario:
    """Agents plus the ordered hypothesis labels they reason over."""

    agents: Sequence[AgentModel]
    hypotheses: tuple

    def __post_init__(self):
        self.hypotheses = tuple(HypothesisSet(self.hypotheses))
        if not self.agents:
            raise ParameterError("scenario has no agents")
        for a in self.agents:
            a.kl_profile(self.hypotheses)  # validates coverage of the family
        self.agents = list(self.agents)

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def p(self) -> int:
        return len(self.hypotheses)

    def report(self, tol: float = 1e-12):
        return optimal_sets(self.agents, self.hypotheses, tol)

    def log_likelihoods(self) -> np.ndarray:
        """Array ``L[i, x, t] = log p^i_theta_t(x)``, padded past each alphabet."""
        m = max(a.alphabet_size for a in self.agents)
        out = np.zeros((self.n, m, self.p))
        for i, a in enumerate(self.agents):
            for t, h in enumerate(self.hypotheses):
                out[i, : a.alphabet_size, t] = np.log(a.family[h].probs)
        return out


@dataclass
class BeliefState:
    log_beliefs: np.ndarray
    k: int = 0

    @classmethod
    def uniform(cls, n: int, p: int) -> "BeliefState":
        return cls(np.full((n, p), -np.log(p)), 0)

    @classmethod
    def from_probs(cls, probs) -> "BeliefState":
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2 or np.any(probs <= 0):
            raise ParameterError("prior beliefs need full support for every agent")
        return cls(normalize_log(np.log(probs)), 0)

    @property
    def beliefs(self) -> np.ndarray:
        return np.exp(self.log_beliefs)

    def check(self, tol: float = 1e-9) -> None:
        if not np.all(np.isfinite(self.log_beliefs)):
            raise ContractViolation("non-finite log-belief")
        dev = np.max(np.abs(np.exp(self.log_beliefs).sum(axis=1) - 1.0))
        if dev > tol:
            raise ContractViolation(f"beliefs not normalized (deviation {dev:.3g})")


@dataclass
class PushSumState:
    y: np.ndarray

    @classmethod
    def ones(cls, n: int) -> "PushSumState":
        return cls(np.ones(n))


class ObservationStream:
    """Per-agent independent signal sampler.

    Agent ``i`` draws from its own ``PCG64`` generator seeded with
    ``SeedSequence([seed, i])``, so streams are reproducible across
    platforms and independent of how many agents a scenario has.
    Uniforms are drawn in blocks; the outcome at each step does not
    depend on the block size.
    """

    def __init__(self, scenario: Scenario, seed: int, block: int = 4096):
        if not 0 <= seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.block = block
        self._rngs = [
            np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, i])))
            for i in range(scenario.n)
        ]
        self._cdfs = []
        for a in scenario.agents:
            c = np.cumsum(a.true_dist.probs)
            c[-1] = np.inf
            self._cdfs.append(c)
        self._buf = np.empty((scenario.n, 0), dtype=np.intp)
        self._pos = 0

    def _refill(self):
        rows = [
            np.searchsorted(cdf, rng.random(self.block), side="right")
            for rng, cdf in zip(self._rngs, self._cdfs)
        ]
        self._buf = np.vstack(rows)
        self._pos = 0

    def next(self) -> np.ndarray:
        """Outcome indices, one per agent, for the next time step."""
        if self._pos >= self._buf.shape[1]:
            self._refill()
        x = self._buf[:, self._pos]
        self._pos += 1
        return x


def _likelihood_term(loglik: np.ndarray, observations) -> np.ndarray:
    obs = np.asarray(observations, dtype=np.intp)
    if obs.shape != (loglik.shape[0],):
        raise DimensionError("need exactly one observation per agent")
    return loglik[np.arange(loglik.shape[0]), obs, :]


def log_linear_step(state: BeliefState, T, observations, scenario: Scenario,
                    loglik: Optional[np.ndarray] = None) -> BeliefState:
    """One step of the log-linear rule.

    Each agent takes the ``T``-weighted geometric mean of its neighbors'
    beliefs, multiplies by the likelihood of its own new signal, and
    renormalizes.
    """
    T = as_array(T)
    check_stochastic(T, "row")
    if T.shape != (scenario.n, scenario.n):
        raise DimensionError("weight matrix does not match agent count")
    if loglik is None:
        loglik = scenario.log_likelihoods()
    new = T @ state.log_beliefs + _likelihood_term(loglik, observations)
    return BeliefState(normalize_log(new), state.k + 1)


def push_sum_step(state: BeliefState, y: PushSumState, T, observations, scenario: Scenario,
                  loglik: Optional[np.ndarray] = None):
    """One step of the push-sum corrected rule for column-stochastic ``T``.

    Returns the new ``(BeliefState, PushSumState)``.
    """
    T = as_array(T)
    check_stochastic(T, "column")
    if np.any(y.y <= 0):
        raise ContractViolation("push-sum weights must stay positive")
    if loglik is None:
        loglik = scenario.log_likelihoods()
    y_new = T @ y.y
    if np.any(y_new <= 0):
        raise ContractViolation("push-sum weight became nonpositive")
    mixed = T @ (y.y[:, None] * state.log_beliefs)
    new = (mixed + _likelihood_term(loglik, observations)) / y_new[:, None]
    return BeliefState(normalize_log(new), state.k + 1), PushSumState(y_new)


def record_points(horizon: int, spec="geometric:1.2") -> np.ndarray:
    """Time indices to snapshot: every ``r`` steps, or geometric spacing.

    ``0`` and ``horizon`` are always included.
    """
    if horizon < 1:
        raise ParameterError("horizon must be at least 1")
    if isinstance(spec, str) and spec.startswith("geometric"):
        _, _, ratio = spec.partition(":")
        ratio = float(ratio) if ratio else 1.2
        if ratio <= 1.0:
            raise ParameterError("geometric record ratio must exceed 1")
        count = int(np.ceil(np.log(horizon) / np.log(ratio))) + 2
        pts = np.floor(ratio ** np.arange(count)).astype(np.int64)
        pts = pts[pts <= horizon]
    else:
        every = int(spec)
        if every < 1:
            raise ParameterError("record-every must be a positive integer")
        pts = np.arange(0, horizon + 1, every, dtype=np.int64)
    return np.unique(np.concatenate([[0], pts, [horizon]]))


@dataclass
class Trajectory:
    hypotheses: tuple
    k: np.ndarray
    log_beliefs: np.ndarray  # (records, n, p)
    y: Optional[np.ndarray] = None
    diagnostics: list = field(default_factory=list)

    @property
    def beliefs(self) -> np.ndarray:
        return np.exp(self.log_beliefs)

    @property
    def final(self) -> BeliefState:
        return BeliefState(self.log_beliefs[-1].copy(), int(self.k[-1]))

    def belief_in(self, label) -> np.ndarray:
        """``(records, n)`` beliefs on one hypothesis."""
        return self.beliefs[:, :, self.hypotheses.index(label)]

    def first_time_all_above(self, label, threshold: float) -> Optional[int]:
        ok = np.all(self.belief_in(label) >= threshold, axis=1)
        idx = np.flatnonzero(ok)
        return int(self.k[idx[0]]) if idx.size else None


RULES = ("log-linear", "push-sum")


def run_simulation(
    scenario: Scenario,
    graph: GraphSchedule,
    lam: LambdaSchedule,
    policy: WeightPolicy = WeightPolicy("row"),
    rule: str = "log-linear",
    horizon: int = 100,
    seed: int = 0,
    record_every="geometric:1.2",
    prior: Optional[BeliefState] = None,
    callback: Optional[Callable] = None,
    track_diagnostics: bool = False,
    B: Optional[int] = None,
) -> Trajectory:
    """Iterate edges -> weights -> signals -> update for ``horizon`` steps.

    Step ``k`` maps the state at time ``k`` to ``k+1`` using ``T_k`` built
    from ``graph.edges_at(k)`` and ``lam(k)``. ``callback(k, state, y, diag)``
    is invoked at every recorded time (``diag`` is None unless tracking). With ``track_diagnostics`` the backward
    product of the weights is accumulated and summarized at each record.
    """
    if rule not in RULES:
        raise ParameterError(f"unknown rule {rule!r}")
    if rule == "push-sum" and policy.kind != "column":
        raise ParameterError("push-sum needs a column-stochastic weight policy")
    if rule == "log-linear" and policy.kind != "row":
        raise ParameterError("log-linear rule needs a row-stochastic weight policy")
    if graph.n != scenario.n:
        raise DimensionError(f"graph has {graph.n} nodes, scenario has {scenario.n} agents")
    n, p = scenario.n, scenario.p
    loglik = scenario.log_likelihoods()
    agent_idx = np.arange(n)
    stream = ObservationStream(scenario, seed)
    points = record_points(horizon, record_every)

    state = prior.log_beliefs.copy() if prior is not None else BeliefState.uniform(n, p).log_beliefs
    if state.shape != (n, p):
        raise DimensionError("prior shape does not match the scenario")
    y = np.ones(n)
    eye = np.eye(n)

    product = None
    if track_diagnostics:
        from .ergodicity import BackwardProduct

        product = BackwardProduct(n, kind=policy.kind, B=B)

    rec_lb = np.empty((points.size, n, p))
    rec_y = np.empty((points.size, n)) if rule == "push-sum" else None
    diagnostics = []
    A_cache = {}
    next_rec = 0

    def record(k):
        nonlocal next_rec
        rec_lb[next_rec] = state
        if rec_y is not None:
            rec_y[next_rec] = y
        diag = product.diagnostics() if product is not None else None
        if diag is not None:
            diagnostics.append(diag)
        if callback is not None:
            callback(k, BeliefState(state.copy(), k), PushSumState(y.copy()), diag)
        next_rec += 1

    if points[0] == 0:
        record(0)
    for k in range(horizon):
        edges = graph.edges_at(k)
        x = stream.next()
        lik = loglik[agent_idx, x, :]
        if edges.edges:
            A = A_cache.get(edges.edges)
            if A is None:
                A = neighbor_matrix(edges, policy)
                check_stochastic(A, policy.kind)
                A_cache[edges.edges] = A
            lam_k = lam(k)
            if not 0.0 < lam_k <= 1.0:
                raise ContractViolation(f"lambda_{k} = {lam_k!r} outside (0, 1]")
            T = (1.0 - lam_k) * eye + lam_k * A
            if rule == "log-linear":
                state = T @ state + lik
            else:
                y_new = T @ y
                if np.any(y_new <= 0):
                    raise ContractViolation("push-sum weight became nonpositive")
                state = (T @ (y[:, None] * state) + lik) / y_new[:, None]
                y = y_new
            if product is not None:
                product.push(T)
        else:
            # T_k = I: independent Bayesian updates, y unchanged
            state = state + lik
            if product is not None:
                product.push_identity()
        state = state - logsumexp(state, axis=1, keepdims=True)
        if next_rec < points.size and points[next_rec] == k + 1:
            record(k + 1)

    if not np.all(np.isfinite(state)):
        raise ContractViolation("non-finite log-beliefs at the end of the run")
    return Trajectory(scenario.hypotheses, points, rec_lb, rec_y, diagnostics)
