"""Production-system semantics: string rewriting under an ordered rule set.

A system is a tuple (alphabet, rules, initial states, goal states). Working
memory is a plain string over the alphabet; a rule (precondition, action)
rewrites the leftmost occurrence of its precondition. A rule sequence is a
list of rule indices; a sequence *halts* if any prefix of it (including the
empty prefix) drives the start string into a goal state. That prefix
convention makes the halting predicate total, deterministic, and monotone
under extension, which is what the amplified search in `driver` relies on.

System definition files are JSON objects with fields `alphabet` (list of
single-character strings), `rules` (ordered list of {"pre": str, "post":
str}), `initial` (list of strings), `goals` (list of strings) and
`max_memory_len` (int, default 64). Two optional fields select matching
behaviour: `rule_match` ("substring" | "exact", default "substring") and
`goal_match` ("exact" | "substring", default "exact"). Unknown fields are
rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import AlphabetMismatch, CapExceeded, InputError, MemoryOverflow
from .limits import check_size

RULE_MATCH_MODES = ("substring", "exact")
GOAL_MATCH_MODES = ("exact", "substring")

RuleSequence = tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct single-character printable symbols."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise InputError("alphabet must be non-empty")
        for sym in self.symbols:
            if not (isinstance(sym, str) and len(sym) == 1 and sym.isprintable()):
                raise InputError(f"alphabet symbol {sym!r} is not a printable character")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError("alphabet contains duplicate symbols")

    def __contains__(self, sym: str) -> bool:
        return sym in self.symbols

    def check_string(self, s: str, what: str) -> None:
        for ch in s:
            if ch not in self.symbols:
                raise AlphabetMismatch(f"{what} {s!r} uses symbol {ch!r} outside the alphabet")


@dataclass(frozen=True)
class Rule:
    """Rewrite rule: replace an occurrence of `precondition` with `action`."""

    precondition: str
    action: str

    def __post_init__(self):
        if not self.precondition:
            raise InputError("rule precondition must be non-empty")


@dataclass(frozen=True)
class ProductionSystem:
    """A rewriting system with designated initial and goal strings.

    `rules` keep their construction order; rule sequences refer to rules by
    index into this tuple, never by content. `initial_states` and
    `goal_states` preserve file order (index into `initial_states` is the
    state-register labelling used by the statevector engine).
    """

    alphabet: Alphabet
    rules: tuple[Rule, ...]
    initial_states: tuple[str, ...]
    goal_states: tuple[str, ...]
    max_memory_len: int = 64
    rule_match: str = "substring"
    goal_match: str = "exact"

    def __post_init__(self):
        if not self.rules:
            raise InputError("a production system needs at least one rule")
        if not self.initial_states or not self.goal_states:
            raise InputError("initial and goal state sets must be non-empty")
        if len(set(self.initial_states)) != len(self.initial_states):
            raise InputError("duplicate initial states")
        if len(set(self.goal_states)) != len(self.goal_states):
            raise InputError("duplicate goal states")
        if self.max_memory_len < 1:
            raise InputError("max_memory_len must be positive")
        if self.rule_match not in RULE_MATCH_MODES:
            raise InputError(f"rule_match must be one of {RULE_MATCH_MODES}")
        if self.goal_match not in GOAL_MATCH_MODES:
            raise InputError(f"goal_match must be one of {GOAL_MATCH_MODES}")
        for rule in self.rules:
            self.alphabet.check_string(rule.precondition, "rule precondition")
            self.alphabet.check_string(rule.action, "rule action")
        for s in self.initial_states:
            self.alphabet.check_string(s, "initial state")
            if len(s) > self.max_memory_len:
                raise InputError(f"initial state {s!r} exceeds max_memory_len")
        for s in self.goal_states:
            self.alphabet.check_string(s, "goal state")

    @property
    def branching_factor(self) -> int:
        return len(self.rules)

    def is_goal(self, memory: str) -> bool:
        if self.goal_match == "exact":
            return memory in self.goal_states
        return any(g in memory for g in self.goal_states)


@dataclass(frozen=True)
class MuProblem:
    """Unbounded-minimisation instance: least m with evaluator(args, m) == target.

    `cap` bounds the scan; genuine non-termination is not representable in a
    finite run, so exhausting the cap raises CapExceeded instead.
    """

    evaluator: Callable[[tuple, int], int]
    target: int
    cap: int
    args: tuple = ()

    def __post_init__(self):
        if self.cap < 1:
            raise InputError("MuProblem cap must be >= 1")


@dataclass
class ExecutionResult:
    """Outcome of running one rule sequence from a start string.

    `trace` lists the memories visited (trace[0] is the start); it truncates
    where a rule fails to apply or would overflow memory. `halt_depth` is the
    length of the shortest prefix that reached a goal, or None.
    """

    trace: list[str]
    halted: bool
    halt_depth: int | None
    applied: int
    stop_reason: str  # "completed" | "inapplicable" | "overflow"


@dataclass
class ClassicalSearchResult:
    """Result of classical iterative deepening."""

    found: bool
    d_star: int | None
    witness: RuleSequence | None
    nodes_expanded: int


def apply_rule(system: ProductionSystem, memory: str, rule: Rule) -> str | None:
    """Apply one rule to a memory string, or return None if it does not match.

    Substring mode rewrites the leftmost occurrence of the precondition;
    exact mode requires the precondition to equal the whole memory.
    """
    system.alphabet.check_string(rule.precondition, "rule precondition")
    system.alphabet.check_string(rule.action, "rule action")
    system.alphabet.check_string(memory, "working memory")
    if system.rule_match == "exact":
        if memory != rule.precondition:
            return None
        result = rule.action
    else:
        at = memory.find(rule.precondition)
        if at < 0:
            return None
        result = memory[:at] + rule.action + memory[at + len(rule.precondition):]
    if len(result) > system.max_memory_len:
        raise MemoryOverflow(
            f"rewrite to {len(result)} symbols exceeds capacity {system.max_memory_len}"
        )
    return result


def _walk(system: ProductionSystem, start: str, seq: Sequence[int]) -> ExecutionResult:
    """Apply a sequence of rule indices, tracking the shallowest goal hit."""
    b = system.branching_factor
    memory = start
    trace = [memory]
    halt_depth = 0 if system.is_goal(memory) else None
    stop_reason = "completed"
    applied = 0
    for step, idx in enumerate(seq):
        if not 0 <= idx < b:
            raise InputError(f"rule index {idx} out of range for {b} rules")
        try:
            nxt = apply_rule(system, memory, system.rules[idx])
        except MemoryOverflow:
            stop_reason = "overflow"
            break
        if nxt is None:
            stop_reason = "inapplicable"
            break
        memory = nxt
        trace.append(memory)
        applied = step + 1
        if halt_depth is None and system.is_goal(memory):
            halt_depth = applied
    return ExecutionResult(trace, halt_depth is not None, halt_depth, applied, stop_reason)


def execute_sequence(system: ProductionSystem, start: str, seq: Sequence[int]) -> ExecutionResult:
    """Run a rule sequence from `start`.

    Raises MemoryOverflow if a rewrite overflows before any goal was reached;
    once a goal has been hit the sequence already counts as halting, so later
    overflow merely truncates the trace.
    """
    system.alphabet.check_string(start, "start state")
    result = _walk(system, start, tuple(seq))
    if result.stop_reason == "overflow" and not result.halted:
        raise MemoryOverflow(
            f"sequence {tuple(seq)} overflows memory after {result.applied} steps"
        )
    return result


def halting_predicate(system: ProductionSystem, start: str, seq: Sequence[int]) -> int:
    """Total 0/1 predicate: does any prefix of `seq` reach a goal from `start`?

    Overflow and inapplicable rules both read as "continue" from that point,
    which keeps the predicate total and monotone under sequence extension.
    """
    return int(_walk(system, start, tuple(seq)).halted)


def enumerate_paths(b: int, d: int) -> list[RuleSequence]:
    """All b**d rule-index sequences of length d, in lexicographic order."""
    if b < 1 or d < 0:
        raise InputError(f"need b >= 1 and d >= 0, got b={b} d={d}")
    check_size(b**d, f"path space b={b} d={d}")
    if d == 0:
        return [()]
    seqs: list[RuleSequence] = [()]
    for _ in range(d):
        seqs = [s + (i,) for s in seqs for i in range(b)]
    return seqs


def sequence_to_index(seq: Sequence[int], b: int) -> int:
    """Base-b value of a sequence, first rule as the most significant digit."""
    value = 0
    for idx in seq:
        if not 0 <= idx < b:
            raise InputError(f"rule index {idx} out of range for {b} rules")
        value = value * b + idx
    return value


def index_to_sequence(value: int, b: int, d: int) -> RuleSequence:
    """Inverse of sequence_to_index for length-d sequences."""
    if not 0 <= value < b**d:
        raise InputError(f"path index {value} out of range for b={b} d={d}")
    digits = []
    for _ in range(d):
        value, digit = divmod(value, b)
        digits.append(digit)
    return tuple(reversed(digits))


@lru_cache(maxsize=4096)
def marked_vector(system: ProductionSystem, start: str, d: int) -> np.ndarray:
    """Halting bit for every depth-d sequence, ordered like enumerate_paths.

    Shares rewriting work across common prefixes: once a prefix halts the
    whole subtree is marked without descending, and a dead prefix
    (inapplicable rule or overflow) zeroes its subtree.
    """
    b = system.branching_factor
    n = b**d
    check_size(n, f"path space b={b} d={d}")
    marks = np.zeros(n, dtype=bool)
    system.alphabet.check_string(start, "start state")

    def fill(memory: str, depth: int, base: int) -> None:
        span = b ** (d - depth)
        if system.is_goal(memory):
            marks[base:base + span] = True
            return
        if depth == d:
            return
        child_span = span // b
        for i, rule in enumerate(system.rules):
            try:
                nxt = apply_rule(system, memory, rule)
            except MemoryOverflow:
                continue
            if nxt is not None:
                fill(nxt, depth + 1, base + i * child_span)

    fill(start, 0, 0)
    marks.flags.writeable = False
    return marks


def classical_mu(problem: MuProblem) -> int:
    """Scan m = 0, 1, ... for the least m hitting the target; CapExceeded if none."""
    for m in range(problem.cap):
        if problem.evaluator(problem.args, m) == problem.target:
            return m
    raise CapExceeded(f"no m < {problem.cap} satisfies the target condition")


def classical_ids(system: ProductionSystem, start: str, depth_cap: int) -> ClassicalSearchResult:
    """Classical iterative deepening over the rule tree.

    Returns the minimal depth d* at which a goal state occurs, one witness
    sequence of that length, and the total number of node expansions across
    all deepening rounds. found=False when no goal exists within depth_cap.
    """
    if depth_cap < 0:
        raise InputError("depth_cap must be >= 0")
    system.alphabet.check_string(start, "start state")
    expanded = 0

    def dls(memory: str, path: list[int], limit: int) -> RuleSequence | None:
        nonlocal expanded
        if system.is_goal(memory):
            return tuple(path)
        if len(path) == limit:
            return None
        expanded += 1
        for i, rule in enumerate(system.rules):
            try:
                nxt = apply_rule(system, memory, rule)
            except MemoryOverflow:
                continue
            if nxt is None:
                continue
            path.append(i)
            hit = dls(nxt, path, limit)
            path.pop()
            if hit is not None:
                return hit
        return None

    for limit in range(depth_cap + 1):
        witness = dls(start, [], limit)
        if witness is not None:
            return ClassicalSearchResult(True, len(witness), witness, expanded)
    return ClassicalSearchResult(False, None, None, expanded)


@dataclass
class DeterministicTrace:
    """Trace of first-applicable-rule evolution from one start string."""

    trace: list[str]
    goal_step: int | None
    rule_steps: list[int] = field(default_factory=list)
    stop_reason: str = "stuck"  # "goal" | "stuck" | "cap" | "overflow"


def deterministic_trace(system: ProductionSystem, start: str, max_steps: int) -> DeterministicTrace:
    """Evolve by always firing the lowest-indexed applicable rule.

    This is the deterministic control used both to replay compiled machine
    systems and to assign a per-input halting time in the halt-qubit demo.
    Evolution stops at the first goal state, when no rule applies, on
    overflow, or after max_steps.
    """
    system.alphabet.check_string(start, "start state")
    memory = start
    trace = [memory]
    rule_steps: list[int] = []
    if system.is_goal(memory):
        return DeterministicTrace(trace, 0, rule_steps, "goal")
    for step in range(1, max_steps + 1):
        fired = None
        for i, rule in enumerate(system.rules):
            try:
                nxt = apply_rule(system, memory, rule)
            except MemoryOverflow:
                return DeterministicTrace(trace, None, rule_steps, "overflow")
            if nxt is not None:
                fired = (i, nxt)
                break
        if fired is None:
            return DeterministicTrace(trace, None, rule_steps, "stuck")
        rule_steps.append(fired[0])
        memory = fired[1]
        trace.append(memory)
        if system.is_goal(memory):
            return DeterministicTrace(trace, step, rule_steps, "goal")
    return DeterministicTrace(trace, None, rule_steps, "cap")


_SYSTEM_FIELDS = {"alphabet", "rules", "initial", "goals", "max_memory_len",
                  "rule_match", "goal_match"}
_RULE_FIELDS = {"pre", "post"}


def system_from_dict(data: dict) -> ProductionSystem:
    """Build a ProductionSystem from parsed JSON, rejecting unknown fields."""
    if not isinstance(data, dict):
        raise InputError("system definition must be a JSON object")
    unknown = set(data) - _SYSTEM_FIELDS
    if unknown:
        raise InputError(f"unknown system field(s): {', '.join(sorted(unknown))}")
    for required in ("alphabet", "rules", "initial", "goals"):
        if required not in data:
            raise InputError(f"system field {required!r} is missing")
    rules = []
    for i, entry in enumerate(data["rules"]):
        if not isinstance(entry, dict):
            raise InputError(f"rules[{i}] must be an object")
        bad = set(entry) - _RULE_FIELDS
        if bad:
            raise InputError(f"rules[{i}] has unknown field(s): {', '.join(sorted(bad))}")
        if "pre" not in entry or "post" not in entry:
            raise InputError(f"rules[{i}] needs both 'pre' and 'post'")
        rules.append(Rule(str(entry["pre"]), str(entry["post"])))
    return ProductionSystem(
        alphabet=Alphabet(tuple(str(s) for s in data["alphabet"])),
        rules=tuple(rules),
        initial_states=tuple(str(s) for s in data["initial"]),
        goal_states=tuple(str(s) for s in data["goals"]),
        max_memory_len=int(data.get("max_memory_len", 64)),
        rule_match=str(data.get("rule_match", "substring")),
        goal_match=str(data.get("goal_match", "exact")),
    )


def system_to_dict(system: ProductionSystem) -> dict:
    return {
        "alphabet": list(system.alphabet.symbols),
        "rules": [{"pre": r.precondition, "post": r.action} for r in system.rules],
        "initial": list(system.initial_states),
        "goals": list(system.goal_states),
        "max_memory_len": system.max_memory_len,
        "rule_match": system.rule_match,
        "goal_match": system.goal_match,
    }


def load_system(path) -> ProductionSystem:
    """Load a system definition file; parse errors carry line/column info."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                             f"{exc.msg}") from None
    try:
        return system_from_dict(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def save_system(system: ProductionSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_dict(system), fh, indent=2)
        fh.write("\n")


def tree_system(depth: int, goal_word: str = "aba") -> ProductionSystem:
    """Binary tree-search system with a single goal at the given depth.

    Two always-applicable rules grow a word one letter at a time by rewriting
    the end marker, so every depth-d string is distinct and the unique goal
    word of length `depth` is reachable by exactly one sequence.
    """
    if len(goal_word) != depth or set(goal_word) - {"a", "b"}:
        raise InputError("goal_word must be over {a,b} and of length `depth`")
    return ProductionSystem(
        alphabet=Alphabet(("a", "b", "E")),
        rules=(Rule("E", "aE"), Rule("E", "bE")),
        initial_states=("E",),
        goal_states=(goal_word + "E",),
        max_memory_len=max(depth + 8, 16),
    )
