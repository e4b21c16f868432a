"""Scenario files: a flat ``key = value`` format with per-agent sections.

Grammar
-------
::

    # comment (also after values)
    key = value                 top-level settings
    [agent 3]                   one agent (1-based)
    [agents 2-10]               the same block for a range of agents
    true = 0.3 0.7              probabilities over the alphabet, or bernoulli(0.7)
    theta1 = bernoulli(0.2)     one line per hypothesis label
    prior = 0.5 0.5             optional, over the hypotheses

``bernoulli(p)`` means the vector ``[1 - p, p]`` (index 1 is the success
symbol). Top-level keys:

    name, hypotheses (comma list), alphabet (comma list of symbols),
    rule (log-linear | push-sum), policy (row | column),
    horizon, seed, record_every (int or geometric:RATIO),
    graph (static | periodic | table | random),
    graph.base (path | ring | undirected-ring | complete | empty | edge list "1>2 2>1"),
    graph.period, graph.steps (table entries separated by "|"),
    graph.seed, graph.extra_p,
    lambda (constant | power | table), lambda.c, lambda.rho, lambda.values.

Edge lists use 1-based agents, ``a>b`` meaning ``a`` sends to ``b`` and
``a-b`` meaning both directions.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .beliefs import BeliefState, Scenario, record_points
from .errors import ConfigError, SocialLearningError
from .graphs import (
    EdgeSet,
    GraphSchedule,
    complete_edges,
    empty_edges,
    find_connectivity_window,
    path_edges,
    ring_edges,
)
from .hypotheses import AgentModel, CategoricalDistribution
from .weights import LambdaSchedule, WeightPolicy, as_fraction

TOP_KEYS = {
    "name", "hypotheses", "alphabet", "rule", "policy", "horizon", "seed",
    "record_every", "out", "graph", "graph.base", "graph.period", "graph.steps",
    "graph.seed", "graph.extra_p", "lambda", "lambda.c", "lambda.rho", "lambda.values",
}
DEFAULTS = {
    "rule": "log-linear",
    "horizon": "1000",
    "seed": "0",
    "record_every": "geometric:1.2",
    "graph": "static",
    "lambda": "constant",
}

_SECTION = re.compile(r"^\[\s*agents?\s+(\d+)(?:\s*-\s*(\d+))?\s*\]$")
_BERN = re.compile(r"^bernoulli\(\s*([^)]+)\s*\)$", re.IGNORECASE)


@dataclass
class ScenarioConfig:
    settings: dict
    agents: dict  # agent index (1-based) -> {key: value}
    lines: dict = field(default_factory=dict)  # key or (agent, key) -> line number
    source: str = "<config>"

    # --- parsing -------------------------------------------------------

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> "ScenarioConfig":
        settings, agents, lines = {}, {}, {}
        current = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                m = _SECTION.match(line)
                if not m:
                    raise ConfigError(f"bad section header {line!r}", lineno, source)
                lo = int(m.group(1))
                hi = int(m.group(2) or lo)
                if lo < 1 or hi < lo:
                    raise ConfigError(f"bad agent range {lo}-{hi}", lineno, source)
                current = list(range(lo, hi + 1))
                for a in current:
                    agents.setdefault(a, {})
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ConfigError(f"expected 'key = value', got {line!r}", lineno, source)
            key, value = key.strip(), value.strip()
            if not key:
                raise ConfigError("empty key", lineno, source)
            if current is None:
                if key not in TOP_KEYS:
                    raise ConfigError(f"unknown setting {key!r}", lineno, source)
                settings[key] = value
                lines[key] = lineno
            else:
                for a in current:
                    agents[a][key] = value
                    lines[(a, key)] = lineno
        return cls(settings, agents, lines, source)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = resolve_config_path(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
        return cls.parse(text, str(path))

    def override(self, assignment: str) -> None:
        """Apply ``KEY=VALUE``; ``agent.N.KEY=VALUE`` targets one agent."""
        key, eq, value = assignment.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"override must be KEY=VALUE, got {assignment!r}", None, "--override")
        m = re.match(r"^agent\.(\d+)\.(.+)$", key)
        if m:
            a = int(m.group(1))
            self.agents.setdefault(a, {})[m.group(2)] = value
            self.lines[(a, m.group(2))] = None
            return
        if key not in TOP_KEYS:
            raise ConfigError(f"unknown setting {key!r}", None, "--override")
        self.settings[key] = value
        self.lines[key] = None

    # --- typed accessors -----------------------------------------------

    def get(self, key, default=None):
        return self.settings.get(key, DEFAULTS.get(key, default))

    def fail(self, key, message):
        raise ConfigError(message, self.lines.get(key), self.source)

    def _int(self, key, lo=0):
        raw = self.get(key)
        try:
            val = int(raw)
        except (TypeError, ValueError):
            self.fail(key, f"{key} must be an integer, got {raw!r}")
        if val < lo:
            self.fail(key, f"{key} must be >= {lo}, got {val}")
        return val

    def _float(self, key, default=None):
        raw = self.get(key, default)
        try:
            return float(as_fraction(raw)) if "/" in str(raw) else float(raw)
        except (TypeError, ValueError, ZeroDivisionError):
            self.fail(key, f"{key} must be a number, got {raw!r}")

    @property
    def n(self) -> int:
        if not self.agents:
            raise ConfigError("no [agent] sections", None, self.source)
        ids = sorted(self.agents)
        if ids != list(range(1, len(ids) + 1)):
            raise ConfigError(f"agents must be numbered 1..n without gaps, got {ids}", None, self.source)
        return len(ids)

    @property
    def hypotheses(self) -> tuple:
        raw = self.get("hypotheses")
        if raw is None:
            self.fail("hypotheses", "missing 'hypotheses' setting")
        return tuple(h.strip() for h in raw.split(",") if h.strip())

    @property
    def horizon(self) -> int:
        return self._int("horizon", lo=1)

    @property
    def seed(self) -> int:
        val = self._int("seed", lo=0)
        if val >= 2**64:
            self.fail("seed", "seed must fit in 64 bits")
        return val

    @property
    def record_every(self):
        raw = str(self.get("record_every"))
        try:
            record_points(1, raw if raw.startswith("geometric") else int(raw))
        except (ValueError, SocialLearningError):
            self.fail("record_every", f"record_every must be an integer or geometric:RATIO, got {raw!r}")
        return raw if raw.startswith("geometric") else int(raw)

    @property
    def rule(self) -> str:
        rule = self.get("rule")
        if rule not in ("log-linear", "push-sum"):
            self.fail("rule", f"rule must be log-linear or push-sum, got {rule!r}")
        return rule

    def policy(self) -> WeightPolicy:
        kind = self.get("policy", "row" if self.rule == "log-linear" else "column")
        try:
            return WeightPolicy(kind)
        except SocialLearningError as exc:
            self.fail("policy", str(exc))

    def _dist(self, agent, key) -> CategoricalDistribution:
        raw = self.agents[agent][key]
        where = self.lines.get((agent, key))
        m = _BERN.match(raw)
        try:
            if m:
                return CategoricalDistribution.bernoulli(float(m.group(1)))
            vals = [float(v) for v in re.split(r"[,\s]+", raw) if v]
            return CategoricalDistribution(vals)
        except (ValueError, SocialLearningError) as exc:
            raise ConfigError(f"agent {agent} {key}: {exc}", where, self.source) from exc

    def scenario(self) -> Scenario:
        hyps = self.hypotheses
        agents = []
        alphabet = self.get("alphabet")
        m_expected = len([s for s in alphabet.split(",") if s.strip()]) if alphabet else None
        for a in range(1, self.n + 1):
            block = self.agents[a]
            if "true" not in block:
                raise ConfigError(f"agent {a} has no 'true' distribution", None, self.source)
            extra = set(block) - set(hyps) - {"true", "prior"}
            if extra:
                key = sorted(extra)[0]
                raise ConfigError(f"agent {a}: unknown key {key!r} (not a hypothesis)",
                                  self.lines.get((a, key)), self.source)
            family = {}
            for h in hyps:
                if h not in block:
                    raise ConfigError(f"agent {a} lacks a distribution for hypothesis {h!r}", None, self.source)
                family[h] = self._dist(a, h)
            true = self._dist(a, "true")
            if m_expected is not None and true.size != m_expected:
                raise ConfigError(f"agent {a}: {true.size} outcomes but alphabet has {m_expected}",
                                  self.lines.get((a, "true")), self.source)
            try:
                agents.append(AgentModel(true, family))
            except SocialLearningError as exc:
                raise ConfigError(f"agent {a}: {exc}", self.lines.get((a, "true")), self.source) from exc
        try:
            return Scenario(agents, hyps)
        except SocialLearningError as exc:
            self.fail("hypotheses", str(exc))

    def prior(self) -> Optional[BeliefState]:
        rows = []
        has_any = False
        p = len(self.hypotheses)
        for a in range(1, self.n + 1):
            raw = self.agents[a].get("prior")
            if raw is None:
                rows.append([1.0 / p] * p)
                continue
            has_any = True
            try:
                vals = [float(v) for v in re.split(r"[,\s]+", raw) if v]
                if len(vals) != p:
                    raise ValueError(f"prior needs {p} entries")
                rows.append(CategoricalDistribution(vals).probs)
            except (ValueError, SocialLearningError) as exc:
                raise ConfigError(f"agent {a} prior: {exc}", self.lines.get((a, "prior")), self.source) from exc
        return BeliefState.from_probs(rows) if has_any else None

    def _edges(self, raw, key) -> EdgeSet:
        n = self.n
        named = {
            "path": lambda: path_edges(n),
            "ring": lambda: ring_edges(n, directed=True),
            "directed-ring": lambda: ring_edges(n, directed=True),
            "undirected-ring": lambda: ring_edges(n, directed=False),
            "complete": lambda: complete_edges(n),
            "empty": lambda: empty_edges(n),
        }
        raw = raw.strip()
        if raw in named:
            return named[raw]()
        es = set()
        for tok in raw.split():
            m = re.match(r"^(\d+)([>-])(\d+)$", tok)
            if not m:
                self.fail(key, f"bad edge {tok!r}; use a>b or a-b with 1-based agents")
            a, b = int(m.group(1)) - 1, int(m.group(3)) - 1
            if not (0 <= a < n and 0 <= b < n):
                self.fail(key, f"edge {tok!r} names an agent outside 1..{n}")
            es.add((a, b))
            if m.group(2) == "-":
                es.add((b, a))
        return EdgeSet(n, frozenset(es))

    def graph(self) -> GraphSchedule:
        kind = self.get("graph")
        n = self.n
        try:
            if kind == "static":
                return GraphSchedule.static(self._edges(self.get("graph.base", "complete"), "graph.base"))
            if kind == "periodic":
                return GraphSchedule.periodic(
                    self._edges(self.get("graph.base", "path"), "graph.base"),
                    self._int("graph.period", lo=1) if "graph.period" in self.settings else 1,
                )
            if kind == "table":
                raw = self.get("graph.steps")
                if raw is None:
                    self.fail("graph.steps", "table graph needs graph.steps")
                steps = [self._edges(part, "graph.steps") if part.strip() else empty_edges(n)
                         for part in raw.split("|")]
                return GraphSchedule.from_table(steps)
            if kind == "random":
                return GraphSchedule.seeded_random(
                    n,
                    self._int("graph.period", lo=1) if "graph.period" in self.settings else 1,
                    self._int("graph.seed") if "graph.seed" in self.settings else 0,
                    self._float("graph.extra_p", "0"),
                )
        except ConfigError:
            raise
        except SocialLearningError as exc:
            self.fail("graph", str(exc))
        self.fail("graph", f"unknown graph kind {kind!r}")

    def lambda_schedule(self) -> LambdaSchedule:
        kind = self.get("lambda")
        try:
            if kind == "constant":
                return LambdaSchedule.constant(self._float("lambda.c", "0.5"))
            if kind == "power":
                raw_rho = self.get("lambda.rho", "1")
                try:
                    rho = as_fraction(raw_rho)
                except (ValueError, ZeroDivisionError):
                    self.fail("lambda.rho", f"lambda.rho must be a number or fraction, got {raw_rho!r}")
                return LambdaSchedule.power(rho, self._float("lambda.c", "1"))
            if kind == "table":
                raw = self.get("lambda.values", "")
                try:
                    vals = [float(v) for v in re.split(r"[,\s]+", raw) if v]
                except ValueError:
                    self.fail("lambda.values", f"bad lambda.values {raw!r}")
                return LambdaSchedule.table(vals)
        except ConfigError:
            raise
        except SocialLearningError as exc:
            key = "lambda.c" if "lambda.c" in self.lines else "lambda"
            self.fail(key, str(exc))
        self.fail("lambda", f"unknown lambda schedule {kind!r}")

    def resolved(self) -> dict:
        """Canonical dictionary of every setting, used for hashing."""
        return {
            "settings": {k: self.get(k) for k in sorted(set(self.settings) | set(DEFAULTS)) if k != "out"},
            "agents": {str(a): dict(sorted(b.items())) for a, b in sorted(self.agents.items())},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def validate(self):
        """Build every component once; returns them as a ``RunPlan``."""
        scenario = self.scenario()
        try:
            report = scenario.report()
        except SocialLearningError as exc:
            raise ConfigError(str(exc), None, self.source) from exc
        graph = self.graph()
        lam = self.lambda_schedule()
        policy = self.policy()
        rule = self.rule
        if rule == "push-sum" and policy.kind != "column":
            self.fail("policy", "push-sum needs policy = column")
        if rule == "log-linear" and policy.kind != "row":
            self.fail("policy", "log-linear needs policy = row")
        return RunPlan(
            scenario=scenario,
            report=report,
            graph=graph,
            lam=lam,
            policy=policy,
            rule=rule,
            horizon=self.horizon,
            seed=self.seed,
            record_every=self.record_every,
            prior=self.prior(),
            connectivity=find_connectivity_window(graph),
        )


@dataclass
class RunPlan:
    scenario: Scenario
    report: object
    graph: GraphSchedule
    lam: LambdaSchedule
    policy: WeightPolicy
    rule: str
    horizon: int
    seed: int
    record_every: object
    prior: Optional[BeliefState]
    connectivity: object

    @property
    def B(self) -> Optional[int]:
        return self.connectivity.B if self.connectivity is not None else None


def bundled_scenarios() -> list:
    root = resources.files("sociallearn") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(path) -> Path:
    """A filesystem path, or the name of a bundled scenario (with or without .cfg)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.name.endswith(".cfg") else p.name + ".cfg"
    bundled = resources.files("sociallearn") / "scenarios" / name
    if str(path) in (name, name[:-4]) and bundled.is_file():
        return Path(str(bundled))
    return p
