"""Observation models, KL divergence and the optimal hypothesis sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateScenarioError, DimensionError, ParameterError

SUM_TOL = 1e-12


@dataclass(frozen=True)
class CategoricalDistribution:
    """Probability vector over an index alphabet ``0..m-1`` with full support."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise DimensionError("a categorical distribution needs a 1-d vector")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ParameterError(f"distribution must have full support, got {p.tolist()}")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ParameterError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def bernoulli(cls, p1: float) -> "CategoricalDistribution":
        """Bernoulli(p1) on alphabet {0, 1}; index 1 is the success outcome."""
        return cls(np.array([1.0 - p1, p1]))

    @property
    def size(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, CategoricalDistribution):
            return NotImplemented
        return self.size == other.size and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class HypothesisSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) < 2:
            raise ParameterError("need at least two hypotheses")
        if len(set(labels)) != len(labels):
            raise ParameterError(f"hypothesis labels must be unique: {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class AgentModel:
    """One agent's true signal distribution and its parametrized family.

    ``family`` maps each hypothesis label to a distribution over the same
    alphabet as ``true_dist``.
    """

    true_dist: CategoricalDistribution
    family: Mapping

    def __post_init__(self):
        if not self.family:
            raise ParameterError("agent family is empty")
        m = self.true_dist.size
        for label, dist in self.family.items():
            if dist.size != m:
                raise DimensionError(
                    f"family member {label!r} has {dist.size} outcomes, truth has {m}"
                )
        object.__setattr__(self, "family", dict(self.family))

    @property
    def alphabet_size(self) -> int:
        return self.true_dist.size

    def kl_profile(self, hypotheses: Sequence) -> np.ndarray:
        """D_KL(truth || family[theta]) for every theta in order."""
        missing = [h for h in hypotheses if h not in self.family]
        if missing:
            raise ParameterError(f"family lacks hypotheses {missing}")
        return np.array([kl_divergence(self.true_dist, self.family[h]) for h in hypotheses])


@dataclass(frozen=True)
class IdentifiabilityReport:
    hypotheses: tuple
    global_opt: frozenset
    local_opts: tuple
    objective: np.ndarray = field(repr=False)
    local_kl: np.ndarray = field(repr=False)

    @property
    def no_conflict(self) -> bool:
        common = frozenset.intersection(*self.local_opts)
        return bool(common) and self.global_opt <= common

    @property
    def conflicting(self) -> bool:
        return not frozenset.intersection(*self.local_opts)

    def as_dict(self) -> dict:
        order = {h: i for i, h in enumerate(self.hypotheses)}
        srt = lambda s: sorted(s, key=order.__getitem__)  # noqa: E731
        return {
            "global_opt": srt(self.global_opt),
            "local_opts": [srt(s) for s in self.local_opts],
            "objective": [float(v) for v in self.objective],
            "no_conflict": self.no_conflict,
            "conflicting": self.conflicting,
        }


def kl_divergence(p: CategoricalDistribution, q: CategoricalDistribution) -> float:
    """Kullback-Leibler divergence ``sum p log(p/q)`` in nats."""
    if p.size != q.size:
        raise DimensionError(f"alphabet mismatch: {p.size} vs {q.size}")
    pp, qq = p.probs, q.probs
    d = float(np.sum(pp * (np.log(pp) - np.log(qq))))
    # rounding can leave a tiny negative for p == q
    return max(d, 0.0)


def optimal_sets(
    scenario: Sequence[AgentModel],
    hypotheses: Sequence | None = None,
    tol: float = 1e-12,
) -> IdentifiabilityReport:
    """Global minimizers of the summed KL objective and per-agent minimizers.

    ``scenario`` is a sequence of agents or any object with ``agents`` and
    ``hypotheses`` attributes (hypotheses then default to its labels).

    Raises
    ------
    DegenerateScenarioError
        If every hypothesis minimizes the group objective.
    """
    if hasattr(scenario, "agents"):
        if hypotheses is None:
            hypotheses = scenario.hypotheses
        scenario = scenario.agents
    if not scenario:
        raise ParameterError("scenario has no agents")
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    if hypotheses is None:
        hypotheses = tuple(scenario[0].family)
    hypotheses = tuple(HypothesisSet(hypotheses))

    local_kl = np.vstack([agent.kl_profile(hypotheses) for agent in scenario])
    objective = local_kl.sum(axis=0)

    def argmin_set(values):
        lo = values.min()
        return frozenset(h for h, v in zip(hypotheses, values) if v - lo <= tol)

    global_opt = argmin_set(objective)
    if len(global_opt) == len(hypotheses):
        raise DegenerateScenarioError(
            "every hypothesis minimizes the group objective; nothing to learn"
        )
    local_opts = tuple(argmin_set(row) for row in local_kl)
    return IdentifiabilityReport(hypotheses, global_opt, local_opts, objective, local_kl)
