"""Randomized fair-scheduler simulation with pluggable snipe adversaries,
agent-identity instrumentation, and the replica-tower diagnostics.

Convergence reports are heuristic (a consensus that survived a window of
steps); stability certificates are the verifier's job. Runs are fully
deterministic given (protocol, input, seed, adversary, budgets): the
scheduler draws from a pinned SplitMix64 generator implemented here with
pure 64-bit integer arithmetic, so traces are identical across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .core import (
    Configuration,
    EmptyConfiguration,
    Protocol,
    ProtocolError,
    SnipeEvent,
    StepEvent,
    Trace,
    TransitionRule,
    initial_configuration,
)
from .zoo import plurality

TOMBSTONE = "⊥"

_MASK = (1 << 64) - 1


class SplitMix64:
    """Pinned pseudo-random stream; identical output on every platform."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        # Modulo reduction: bias is irrelevant at population sizes; the
        # contract here is determinism, not statistical perfection.
        return self.next_u64() % n


@dataclass(frozen=True)
class Scheduler:
    """Uniformly random unordered pair of live agents each step."""

    seed: int
    kind: str = "uniform-random-pair"


@dataclass(frozen=True)
class RandomTarget:
    def describe(self) -> str:
        return "random"


@dataclass(frozen=True)
class ByState:
    state: str

    def describe(self) -> str:
        return f"state:{self.state}"


@dataclass(frozen=True)
class MaxMetaLevel:
    def describe(self) -> str:
        return "max-level"


TargetSelector = Union[RandomTarget, ByState, MaxMetaLevel]


@dataclass(frozen=True)
class SnipeDirective:
    at_step: int
    target: TargetSelector


@dataclass(frozen=True)
class Adversary:
    """Timed snipe schedule with a hard budget. Snipes whose selector matches
    no populated state (or that would empty the population, or exceed the
    budget) are skipped and reported."""

    schedule: tuple[SnipeDirective, ...] = ()
    budget: Optional[int] = None

    def resolved_budget(self) -> int:
        return len(self.schedule) if self.budget is None else self.budget


NO_ADVERSARY = Adversary()


@dataclass(frozen=True)
class RunVerdict:
    kind: str  # "converged" | "no-consensus"
    value: Any = None
    at_step: int = -1

    @property
    def converged(self) -> bool:
        return self.kind == "converged"

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.converged:
            doc["value"] = _value_json(self.value)
            doc["at_step"] = self.at_step
        return doc


@dataclass
class RunReport:
    trace: Trace
    verdict: RunVerdict
    window_used: int
    steps_executed: int
    skipped_snipes: tuple[tuple[int, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "trace": self.trace.to_json(),
            "verdict": self.verdict.to_json(),
            "window_used": self.window_used,
            "steps_executed": self.steps_executed,
            "skipped_snipes": [list(s) for s in self.skipped_snipes],
        }


@dataclass
class AgentLedger:
    """Per-agent state histories; sniped agents move to the tombstone."""

    initial_states: tuple[str, ...]
    snapshots: list[tuple[int, tuple[str, ...]]] = field(default_factory=list)

    def history(self, agent: int) -> list[tuple[int, str]]:
        out = [(-1, self.initial_states[agent])]
        for step, states in self.snapshots:
            if states[agent] != out[-1][1]:
                out.append((step, states[agent]))
        return out

    def final_states(self) -> tuple[str, ...]:
        return self.snapshots[-1][1] if self.snapshots else self.initial_states

    def live_count(self) -> int:
        return sum(1 for q in self.final_states() if q != TOMBSTONE)

    def tombstone_count(self) -> int:
        return sum(1 for q in self.final_states() if q == TOMBSTONE)


def _value_json(value):
    if isinstance(value, tuple):
        return [_value_json(v) for v in value]
    return value


def _meta_level(protocol: Protocol, state: str) -> Optional[int]:
    meta = protocol.states[state].meta
    if meta and "level" in meta:
        return meta["level"]
    return None


def _pick_snipe_target(
    protocol: Protocol,
    selector: TargetSelector,
    agents: list[str],
    live: list[int],
    rng: SplitMix64,
) -> Optional[int]:
    """Agent index to snipe, or None when the selector matches nothing."""
    if isinstance(selector, RandomTarget):
        return live[rng.below(len(live))]
    if isinstance(selector, ByState):
        for i in live:
            if agents[i] == selector.state:
                return i
        return None
    levels = {}
    for i in live:
        lvl = _meta_level(protocol, agents[i])
        if lvl is not None:
            levels.setdefault(agents[i], lvl)
    if not levels:
        return None
    # Highest level; ties break to the lexicographically smallest state id.
    best = min(levels, key=lambda q: (-levels[q], q))
    for i in live:
        if agents[i] == best:
            return i
    return None


def _run(
    protocol: Protocol,
    counts: Mapping[str, int],
    scheduler: Scheduler,
    adversary: Adversary,
    max_steps: int,
    window: int,
    ledger: Optional[AgentLedger],
) -> RunReport:
    if window > max_steps:
        raise ProtocolError("window cannot exceed max_steps")
    config0 = initial_configuration(protocol, counts)
    agents: list[str] = []
    for q, n in config0.entries:
        agents.extend([q] * n)
    live = list(range(len(agents)))
    rng = SplitMix64(scheduler.seed)
    events: list = []
    skipped: list[tuple[int, str]] = []
    by_step: dict[int, list[SnipeDirective]] = {}
    for directive in adversary.schedule:
        by_step.setdefault(directive.at_step, []).append(directive)
    budget = adversary.resolved_budget()
    fired = 0

    def snapshot(step: int):
        if ledger is not None:
            states = tuple(
                agents[i] if i in live_set else TOMBSTONE for i in range(len(agents))
            )
            ledger.snapshots.append((step, states))

    live_set = set(live)

    def consensus_now():
        seen = {agents[i] for i in live}
        outs = {protocol.output(q) for q in seen}
        if len(outs) == 1:
            return outs.pop()
        return None

    consensus = consensus_now()
    streak = 1 if consensus is not None else 0
    streak_start = 0
    verdict = None
    step = 0
    while step < max_steps:
        for directive in by_step.get(step, ()):
            if fired >= budget:
                skipped.append((step, f"budget of {budget} exhausted"))
                continue
            if len(live) <= 1:
                skipped.append((step, "would empty the population"))
                continue
            victim = _pick_snipe_target(protocol, directive.target, agents, live, rng)
            if victim is None:
                skipped.append((step, f"no agent matches {directive.target.describe()}"))
                continue
            events.append(SnipeEvent(agents[victim]))
            live.remove(victim)
            live_set.discard(victim)
            fired += 1
            snapshot(step)
            consensus = consensus_now()
            streak = 1 if consensus is not None else 0
            streak_start = step
        if len(live) <= 1:
            verdict = RunVerdict("converged", protocol.output(agents[live[0]]), step)
            break
        i = live[rng.below(len(live))]
        j = live[rng.below(len(live) - 1)]
        if j >= i and live.index(j) >= live.index(i):
            pass
        # Draw the second agent from the remaining live slots.
        idx_i = live.index(i)
        idx_j = rng.below(len(live) - 1)
        if idx_j >= idx_i:
            idx_j += 1
        j = live[idx_j]
        qa, qb = agents[i], agents[j]
        post = protocol.delta((qa, qb))
        pre = tuple(sorted((qa, qb)))
        if post != pre:
            if qa <= qb:
                agents[i], agents[j] = post
            else:
                agents[j], agents[i] = post
            events.append(StepEvent(TransitionRule(pre, post)))
            snapshot(step)
            consensus_new = consensus_now()
            if consensus_new is None or consensus_new != consensus or streak == 0:
                streak_start = step + 1 if consensus_new is None else step
            consensus = consensus_new
            streak = 1 if consensus is not None and (streak == 0 or True) else streak
            streak = (streak if consensus == consensus_now() else 0)
        step += 1
        if consensus is not None:
            streak += 1
        else:
            streak = 0
        if consensus is not None and streak >= window:
            verdict = RunVerdict("converged", consensus, streak_start)
            break
    if verdict is None:
        verdict = RunVerdict("no-consensus")
    final_counts: dict[str, int] = {}
    for i in live:
        final_counts[agents[i]] = final_counts.get(agents[i], 0) + 1
    trace = Trace(config0, tuple(events), Configuration.from_counts(final_counts))
    return RunReport(
        trace=trace,
        verdict=verdict,
        window_used=window,
        steps_executed=step,
        skipped_snipes=tuple(skipped),
    )


def run(
    protocol: Protocol,
    counts: Mapping[str, int],
    scheduler: Scheduler,
    adversary: Adversary = NO_ADVERSARY,
    max_steps: int = 10_000,
    window: int = 200,
) -> RunReport:
    """Simulate uniformly random pair interactions interleaved with the
    adversary's snipes; report heuristic convergence once all live agents
    held one output for `window` consecutive steps."""
    return _run(protocol, counts, scheduler, adversary, max_steps, window, None)


def run_instrumented(
    protocol: Protocol,
    counts: Mapping[str, int],
    scheduler: Scheduler,
    adversary: Adversary = NO_ADVERSARY,
    max_steps: int = 10_000,
    window: int = 200,
) -> tuple[RunReport, AgentLedger]:
    """As run(), additionally tracking every agent's state history."""
    config0 = initial_configuration(protocol, counts)
    initial_states: list[str] = []
    for q, n in config0.entries:
        initial_states.extend([q] * n)
    ledger = AgentLedger(tuple(initial_states))
    report = _run(protocol, counts, scheduler, adversary, max_steps, window, ledger)
    return report, ledger
