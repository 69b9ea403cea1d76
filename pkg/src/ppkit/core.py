"""Execution model for population protocols: states, transitions,
configurations, steps, snipes, consensus, and replayable traces.

All values in this module are immutable after construction and all
operations are pure functions of their inputs, so they can be shared
freely between concurrent tasks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence, Union


class ProtocolError(Exception):
    """Base class for everything this package raises on purpose."""


class RuleNotEnabled(ProtocolError):
    """The configuration lacks the agents required by a transition rule."""


class UnknownRule(ProtocolError):
    """The transition rule does not belong to the protocol."""


class StateNotPopulated(ProtocolError):
    """Tried to snipe an agent from a state holding no agents."""


class EmptyConfiguration(ProtocolError):
    """Operation undefined on configurations without agents."""


class InvalidProtocol(ProtocolError):
    """Structural invariant of a protocol is violated."""


class ReplayMismatch(ProtocolError):
    """Replaying a trace did not reproduce its recorded final configuration."""


OutputValue = Union[int, str, tuple]


def _sorted_pair(pair: Sequence[str]) -> tuple[str, str]:
    a, b = pair
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class TransitionRule:
    """A non-silent rewrite of one unordered pair of agents."""

    pre: tuple[str, str]
    post: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "pre", _sorted_pair(self.pre))
        object.__setattr__(self, "post", _sorted_pair(self.post))

    @property
    def silent(self) -> bool:
        return self.pre == self.post

    def encode(self) -> str:
        return f"{self.pre[0]},{self.pre[1]}->{self.post[0]},{self.post[1]}"

    def to_json(self) -> dict:
        return {"pre": list(self.pre), "post": list(self.post)}

    @classmethod
    def from_json(cls, doc: Mapping) -> "TransitionRule":
        return cls(tuple(doc["pre"]), tuple(doc["post"]))


@dataclass(frozen=True)
class StepEvent:
    rule: TransitionRule

    def to_json(self) -> dict:
        return {"kind": "step", "pre": list(self.rule.pre), "post": list(self.rule.post)}


@dataclass(frozen=True)
class SnipeEvent:
    target: str

    def to_json(self) -> dict:
        return {"kind": "snipe", "target": self.target}


ExecutionEvent = Union[StepEvent, SnipeEvent]


def event_from_json(doc: Mapping) -> ExecutionEvent:
    kind = doc.get("kind")
    if kind == "step":
        return StepEvent(TransitionRule(tuple(doc["pre"]), tuple(doc["post"])))
    if kind == "snipe":
        return SnipeEvent(doc["target"])
    raise ProtocolError(f"unknown event kind: {kind!r}")


@dataclass(frozen=True)
class Configuration:
    """Multiset of agents per state, canonically encoded.

    Entries are kept sorted by state id with strictly positive counts,
    so two configurations are equal as multisets exactly when their
    entries (and hence their encodings) are identical.
    """

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        for state, count in self.entries:
            if count <= 0:
                raise ProtocolError(f"non-positive count for state {state!r}")
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "Configuration":
        return cls(tuple((q, n) for q, n in counts.items() if n != 0))

    def counts(self) -> dict[str, int]:
        return dict(self.entries)

    def count(self, state: str) -> int:
        for q, n in self.entries:
            if q == state:
                return n
        return 0

    @property
    def size(self) -> int:
        return sum(n for _, n in self.entries)

    @property
    def support(self) -> frozenset[str]:
        return frozenset(q for q, _ in self.entries)

    def populates(self, state: str) -> bool:
        return self.count(state) > 0

    def encode(self) -> str:
        return ";".join(f"{q}:{n}" for q, n in self.entries)

    def to_json(self) -> dict:
        return {q: n for q, n in self.entries}

    @classmethod
    def from_json(cls, doc: Mapping[str, int]) -> "Configuration":
        return cls.from_counts(doc)

    def add(self, state: str, delta: int = 1) -> "Configuration":
        counts = self.counts()
        counts[state] = counts.get(state, 0) + delta
        if counts[state] < 0:
            raise ProtocolError(f"count of {state!r} would drop below zero")
        return Configuration.from_counts(counts)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{n}*{q}" if n > 1 else q for q, n in self.entries) + "}"


@dataclass(frozen=True)
class State:
    """A protocol state: its output value plus optional annotations."""

    output: OutputValue
    meta: Optional[Mapping[str, Any]] = None


@dataclass(frozen=True)
class Protocol:
    """A population protocol: states with outputs, initial-state map per
    input variable, and a transition function on unordered state pairs.

    Pairs absent from ``transitions`` are implicitly mapped to themselves;
    such silent pairs never appear in rule enumerations.
    """

    name: str
    output_alphabet: tuple
    states: Mapping[str, State]
    initial: Mapping[str, str]
    transitions: Mapping[tuple[str, str], tuple[str, str]]

    def __post_init__(self):
        alphabet = set(self.output_alphabet)
        if not self.states:
            raise InvalidProtocol("protocol has no states")
        for q, st in self.states.items():
            if not q:
                raise InvalidProtocol("empty state id")
            if st.output not in alphabet:
                raise InvalidProtocol(f"state {q!r} outputs {st.output!r}, not in the alphabet")
        for var, q in self.initial.items():
            if q not in self.states:
                raise InvalidProtocol(f"initial state {q!r} of variable {var!r} is unknown")
        for pre, post in self.transitions.items():
            if len(pre) != 2 or len(post) != 2:
                raise InvalidProtocol(f"transition {pre!r} -> {post!r} is not on pairs")
            for q in (*pre, *post):
                if q not in self.states:
                    raise InvalidProtocol(f"transition references unknown state {q!r}")
            if tuple(pre) != _sorted_pair(pre) or tuple(post) != _sorted_pair(post):
                raise InvalidProtocol(f"transition {pre!r} -> {post!r} is not canonically sorted")

    def delta(self, pair: Sequence[str]) -> tuple[str, str]:
        """Image of an unordered state pair; identity for unlisted pairs."""
        key = _sorted_pair(pair)
        for q in key:
            if q not in self.states:
                raise InvalidProtocol(f"unknown state {q!r}")
        return self.transitions.get(key, key)

    def output(self, state: str) -> OutputValue:
        return self.states[state].output

    def rules(self) -> Iterator[TransitionRule]:
        """All non-silent transition rules, sorted by encoding."""
        out = []
        for pre, post in self.transitions.items():
            if pre != post:
                out.append(TransitionRule(pre, post))
        out.sort(key=TransitionRule.encode)
        return iter(out)

    def has_rule(self, rule: TransitionRule) -> bool:
        return self.transitions.get(rule.pre) == rule.post and not rule.silent

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "output_alphabet": [_value_to_json(v) for v in self.output_alphabet],
            "states": [
                {"id": q, "output": _value_to_json(st.output)}
                | ({"meta": dict(st.meta)} if st.meta else {})
                for q, st in sorted(self.states.items())
            ],
            "initial": {var: q for var, q in sorted(self.initial.items())},
            "transitions": [
                {"pre": list(pre), "post": list(post)}
                for pre, post in sorted(self.transitions.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, doc: Mapping) -> "Protocol":
        states = {
            entry["id"]: State(_value_from_json(entry["output"]), entry.get("meta"))
            for entry in doc["states"]
        }
        transitions = {
            _sorted_pair(entry["pre"]): _sorted_pair(entry["post"])
            for entry in doc["transitions"]
        }
        return cls(
            name=doc["name"],
            output_alphabet=tuple(_value_from_json(v) for v in doc["output_alphabet"]),
            states=states,
            initial=dict(doc["initial"]),
            transitions=transitions,
        )

    @classmethod
    def loads(cls, text: str) -> "Protocol":
        return cls.from_json(json.loads(text))


def _value_to_json(value: OutputValue):
    if isinstance(value, tuple):
        return [_value_to_json(v) for v in value]
    return value


def _value_from_json(value):
    if isinstance(value, list):
        return tuple(_value_from_json(v) for v in value)
    return value


# -- operations ----------------------------------------------------------


def initial_configuration(protocol: Protocol, counts: Mapping[str, int]) -> Configuration:
    """Input configuration placing ``counts[var]`` agents in each variable's
    initial state. Variables sharing a state accumulate. Rejects empty inputs.
    """
    placed: dict[str, int] = {}
    for var, n in counts.items():
        if var not in protocol.initial:
            raise ProtocolError(f"protocol {protocol.name!r} has no input variable {var!r}")
        if n < 0:
            raise ProtocolError(f"negative count for variable {var!r}")
        if n:
            q = protocol.initial[var]
            placed[q] = placed.get(q, 0) + n
    if not placed:
        raise EmptyConfiguration("inputs must contain at least one agent")
    return Configuration.from_counts(placed)


def apply_step(protocol: Protocol, config: Configuration, rule: TransitionRule) -> Configuration:
    """Fire one transition rule: remove its precondition pair, add its
    postcondition pair. Conserves the number of agents."""
    if not protocol.has_rule(rule):
        raise UnknownRule(f"{rule.encode()} is not a rule of {protocol.name!r}")
    counts = config.counts()
    a, b = rule.pre
    need = {a: 2} if a == b else {a: 1, b: 1}
    for q, n in need.items():
        if counts.get(q, 0) < n:
            raise RuleNotEnabled(f"{rule.encode()} not enabled at {config}")
    for q in rule.pre:
        counts[q] -= 1
    for q in rule.post:
        counts[q] = counts.get(q, 0) + 1
    return Configuration.from_counts(counts)


def enabled_rules(protocol: Protocol, config: Configuration) -> list[TransitionRule]:
    """Non-silent rules whose precondition fits inside the configuration,
    sorted by rule encoding."""
    out = []
    for rule in protocol.rules():
        a, b = rule.pre
        if a == b:
            if config.count(a) >= 2:
                out.append(rule)
        elif config.populates(a) and config.populates(b):
            out.append(rule)
    return out


def snipe(config: Configuration, state: str) -> Configuration:
    """Remove one agent from ``state``."""
    if not config.populates(state):
        raise StateNotPopulated(f"{state!r} holds no agents in {config}")
    return config.add(state, -1)


def successors(protocol: Protocol, config: Configuration) -> list[tuple[TransitionRule, Configuration]]:
    """All distinct one-step successors, sorted by rule encoding."""
    return [(rule, apply_step(protocol, config, rule)) for rule in enabled_rules(protocol, config)]


def consensus_output(protocol: Protocol, config: Configuration) -> Optional[OutputValue]:
    """The common output of all populated states, or None if they disagree."""
    if config.size == 0:
        raise EmptyConfiguration("consensus undefined on the empty configuration")
    seen = {protocol.output(q) for q in config.support}
    if len(seen) == 1:
        return seen.pop()
    return None


# -- traces ----------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    """A finite replayable execution prefix."""

    initial: Configuration
    events: tuple[ExecutionEvent, ...]
    final: Configuration
    snipes_used: int = field(default=-1)

    def __post_init__(self):
        if self.snipes_used < 0:
            object.__setattr__(
                self, "snipes_used", sum(1 for e in self.events if isinstance(e, SnipeEvent))
            )

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "events": [e.to_json() for e in self.events],
            "final": self.final.to_json(),
            "snipes_used": self.snipes_used,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Trace":
        return cls(
            initial=Configuration.from_json(doc["initial"]),
            events=tuple(event_from_json(e) for e in doc["events"]),
            final=Configuration.from_json(doc["final"]),
        )


def replay(protocol: Protocol, trace: Trace) -> Configuration:
    """Re-execute a trace's events from its initial configuration.

    Returns the resulting configuration; raises ReplayMismatch if it differs
    from the trace's recorded final configuration.
    """
    config = trace.initial
    for event in trace.events:
        if isinstance(event, StepEvent):
            config = apply_step(protocol, config, event.rule)
        else:
            config = snipe(config, event.target)
    if config != trace.final:
        raise ReplayMismatch(f"replay produced {config}, trace recorded {trace.final}")
    return config
