"""Rewriting semantics, path enumeration, and the classical search baselines."""

import itertools
import json

import numpy as np
import pytest

from conftest import make_system, random_system
from qids.errors import AlphabetMismatch, CapExceeded, InputError, MemoryOverflow
from qids.production import (Alphabet, MuProblem, Rule,
                             apply_rule, classical_ids, classical_mu,
                             deterministic_trace, enumerate_paths,
                             execute_sequence, halting_predicate,
                             index_to_sequence, load_system, marked_vector,
                             save_system, sequence_to_index, system_from_dict,
                             system_to_dict, tree_system)


# --- independent oracles -----------------------------------------------------

def rewrite_once(memory, pre, post, max_len):
    """Test-local leftmost rewrite, kept independent of the library's."""
    for i in range(len(memory) - len(pre) + 1):
        if memory[i:i + len(pre)] == pre:
            out = memory[:i] + post + memory[i + len(pre):]
            return out if len(out) <= max_len else "OVERFLOW"
    return None


def brute_halts(system, start, seq):
    """Recompute prefix-halting with test-local rewriting."""
    memory = start
    if memory in system.goal_states and system.goal_match == "exact":
        return 1
    if system.goal_match == "substring" and any(g in memory for g in system.goal_states):
        return 1
    for idx in seq:
        rule = system.rules[idx]
        memory = rewrite_once(memory, rule.precondition, rule.action, system.max_memory_len)
        if memory is None or memory == "OVERFLOW":
            return 0
        if system.goal_match == "exact":
            if memory in system.goal_states:
                return 1
        elif any(g in memory for g in system.goal_states):
            return 1
    return 0


def bfs_min_goal_depth(system, start, cap):
    """Graph BFS over reachable strings; depth of the shallowest goal."""
    def is_goal(memory):
        if system.goal_match == "exact":
            return memory in system.goal_states
        return any(g in memory for g in system.goal_states)

    if is_goal(start):
        return 0
    seen = {start}
    frontier = [start]
    for depth in range(1, cap + 1):
        nxt = []
        for memory in frontier:
            for rule in system.rules:
                new = rewrite_once(memory, rule.precondition, rule.action,
                                   system.max_memory_len)
                if new in (None, "OVERFLOW") or new in seen:
                    continue
                if is_goal(new):
                    return depth
                seen.add(new)
                nxt.append(new)
        frontier = nxt
    return None


# --- construction ------------------------------------------------------------

def test_alphabet_rejects_duplicates_and_multichar():
    with pytest.raises(InputError):
        Alphabet(("a", "a"))
    with pytest.raises(InputError):
        Alphabet(("ab",))
    with pytest.raises(InputError):
        Alphabet(())


def test_system_validation():
    with pytest.raises(InputError):
        make_system([])  # no rules
    with pytest.raises(InputError):
        Rule("", "x")
    with pytest.raises(AlphabetMismatch):
        make_system([("A", "Z")])  # action off-alphabet
    with pytest.raises(InputError):
        make_system([("A", "B")], rule_match="fuzzy")


# --- apply_rule --------------------------------------------------------------

def test_apply_rule_substring_rewrite():
    system = make_system([("AB", "C")])
    assert apply_rule(system, "xABy", system.rules[0]) == "xCy"


def test_apply_rule_leftmost_tiebreak():
    system = make_system([("A", "B")])
    assert apply_rule(system, "AA", system.rules[0]) == "BA"


def test_apply_rule_no_match():
    system = make_system([("AB", "C")])
    assert apply_rule(system, "xy", system.rules[0]) is None


def test_apply_rule_exact_mode():
    system = make_system([("AB", "C")], rule_match="exact")
    assert apply_rule(system, "AB", system.rules[0]) == "C"
    assert apply_rule(system, "xABy", system.rules[0]) is None


def test_apply_rule_overflow():
    system = make_system([("A", "AA")], max_len=3)
    assert apply_rule(system, "AA", system.rules[0]) == "AAA"
    with pytest.raises(MemoryOverflow):
        apply_rule(system, "AAA", system.rules[0])


def test_apply_rule_is_deterministic():
    system = make_system([("A", "B")])
    results = {apply_rule(system, "xAy", system.rules[0]) for _ in range(25)}
    assert results == {"xBy"}


# --- execute_sequence / halting_predicate ------------------------------------

def test_execute_known_tree_path(fig_tree):
    result = execute_sequence(fig_tree, "E", (0, 1, 0))
    assert result.trace == ["E", "aE", "abE", "abaE"]
    assert result.halted and result.halt_depth == 3


def test_goal_at_root_halts_with_empty_sequence():
    system = make_system([("A", "B")], start="A", goals=("A",))
    result = execute_sequence(system, "A", ())
    assert result.halted and result.halt_depth == 0
    assert result.trace == ["A"]


def test_inapplicable_rule_truncates_and_continues():
    system = make_system([("A", "B"), ("C", "A")])
    result = execute_sequence(system, "A", (1, 0))
    assert result.trace == ["A"]
    assert not result.halted
    assert result.stop_reason == "inapplicable"


def test_inapplicable_after_goal_still_halts():
    system = make_system([("A", "B"), ("C", "A")], goals=("B",))
    result = execute_sequence(system, "A", (0, 1))
    assert result.halted and result.halt_depth == 1
    assert result.trace == ["A", "B"]


def test_overflow_propagates_unless_goal_reached():
    system = make_system([("A", "AA")], max_len=3, goals=("AA",))
    # goal reached at step 1, overflow at step 3 is tolerated
    result = execute_sequence(system, "A", (0, 0, 0))
    assert result.halted and result.halt_depth == 1
    assert result.trace == ["A", "AA", "AAA"]
    hopeless = make_system([("A", "AA")], max_len=3, goals=("B",))
    with pytest.raises(MemoryOverflow):
        execute_sequence(hopeless, "A", (0, 0, 0))
    assert halting_predicate(hopeless, "A", (0, 0, 0)) == 0


def test_halting_predicate_prefix_examples():
    one_deep = tree_system(1, "a")
    assert halting_predicate(one_deep, "E", (0, 1)) == 1
    assert halting_predicate(one_deep, "E", (1, 1)) == 0


def test_rule_index_out_of_range(fig_tree):
    with pytest.raises(InputError):
        halting_predicate(fig_tree, "E", (0, 5))


@pytest.mark.parametrize("trial", range(10))
def test_halting_predicate_matches_bruteforce_depth3(trial):
    system, start = random_system(np.random.default_rng(900 + trial))
    for seq in itertools.product(range(2), repeat=3):
        assert halting_predicate(system, start, seq) == brute_halts(system, start, seq)


def test_execute_flags_match_exhaustive_depth4(fig_tree):
    for seq in itertools.product(range(2), repeat=4):
        walked = execute_sequence(fig_tree, "E", seq)
        assert int(walked.halted) == brute_halts(fig_tree, "E", seq)


@pytest.mark.parametrize("trial", range(20))
def test_prefix_monotonicity(trial):
    gen = np.random.default_rng(3100 + trial)
    system, start = random_system(gen, b=int(gen.integers(2, 4)))
    b = system.branching_factor
    for seq in itertools.product(range(b), repeat=3):
        if halting_predicate(system, start, seq):
            for extra in range(b):
                assert halting_predicate(system, start, seq + (extra,)) == 1


# --- enumerate_paths ----------------------------------------------------------

def test_enumerate_paths_counts():
    assert len(enumerate_paths(2, 3)) == 8
    assert enumerate_paths(3, 0) == [()]
    paths = enumerate_paths(3, 4)
    assert len(paths) == 81
    assert len(set(paths)) == 81


@pytest.mark.parametrize("b", [1, 2, 3, 4])
@pytest.mark.parametrize("d", range(9))
def test_enumerate_paths_cardinality_and_order(b, d):
    paths = enumerate_paths(b, d)
    assert len(paths) == b**d
    assert len(set(paths)) == b**d
    assert paths == sorted(paths)


def test_enumerate_paths_respects_cap(monkeypatch):
    monkeypatch.setenv("QIDS_SIM_CAP", "100")
    from qids.errors import SizeLimit
    with pytest.raises(SizeLimit):
        enumerate_paths(2, 10)


def test_sequence_index_round_trip():
    for b, d in ((2, 5), (3, 4), (4, 3)):
        for i, seq in enumerate(enumerate_paths(b, d)):
            assert sequence_to_index(seq, b) == i
            assert index_to_sequence(i, b, d) == seq


def test_marked_vector_matches_predicate(fig_tree):
    for d in range(5):
        marks = marked_vector(fig_tree, "E", d)
        for i, seq in enumerate(enumerate_paths(2, d)):
            assert bool(marks[i]) == bool(halting_predicate(fig_tree, "E", seq))


# --- classical_mu -------------------------------------------------------------

def test_mu_least_square_root():
    problem = MuProblem(evaluator=lambda args, m: m * m, target=9, cap=100)
    assert classical_mu(problem) == 3


def test_mu_unsatisfiable_raises():
    problem = MuProblem(evaluator=lambda args, m: 0, target=1, cap=100)
    with pytest.raises(CapExceeded):
        classical_mu(problem)


def test_mu_minimality_rescan():
    problem = MuProblem(evaluator=lambda args, m: (m % 7) * (m % 5), target=12, cap=200)
    m = classical_mu(problem)
    assert problem.evaluator((), m) == 12
    assert all(problem.evaluator((), j) != 12 for j in range(m))


def test_mu_over_halting_depth_equals_ids():
    system = tree_system(4, "abab")

    def any_halting_sequence(args, m):
        return int(any(halting_predicate(system, "E", s) for s in enumerate_paths(2, m)))

    assert classical_mu(MuProblem(any_halting_sequence, target=1, cap=10)) == 4
    assert classical_ids(system, "E", 8).d_star == 4


# --- classical_ids ------------------------------------------------------------

def test_ids_depth_zero():
    system = make_system([("A", "B")], start="A", goals=("A",))
    result = classical_ids(system, "A", 5)
    assert result.found and result.d_star == 0 and result.witness == ()


def test_ids_tree_depth3(fig_tree):
    result = classical_ids(fig_tree, "E", 6)
    assert result.found and result.d_star == 3
    assert result.witness == (0, 1, 0)
    assert result.nodes_expanded > 0


def test_ids_unreachable_goal():
    system = make_system([("A", "B")], start="A", goals=("C",))
    result = classical_ids(system, "A", 4)
    assert not result.found and result.d_star is None and result.witness is None


@pytest.mark.parametrize("trial", range(20))
def test_ids_agrees_with_bfs(trial):
    gen = np.random.default_rng(7700 + trial)
    system, start = random_system(gen, b=int(gen.integers(2, 4)))
    expected = bfs_min_goal_depth(system, start, 6)
    result = classical_ids(system, start, 6)
    if expected is None:
        assert not result.found
    else:
        assert result.found and result.d_star == expected
        assert halting_predicate(system, start, result.witness) == 1


# --- deterministic evolution ---------------------------------------------------

def test_deterministic_trace_fires_lowest_rule_first():
    system = make_system([("A", "B"), ("A", "C")], goals=("B",))
    out = deterministic_trace(system, "A", 5)
    assert out.trace == ["A", "B"] and out.goal_step == 1 and out.rule_steps == [0]


def test_deterministic_trace_stuck_and_cap():
    system = make_system([("C", "B")], start="A", goals=("B",))
    assert deterministic_trace(system, "A", 5).stop_reason == "stuck"
    spin = make_system([("A", "A")], start="A", goals=("B",))
    assert deterministic_trace(spin, "A", 5).stop_reason == "cap"


# --- definition files -----------------------------------------------------------

def test_system_file_round_trip(tmp_path, fig_tree):
    path = tmp_path / "sys.json"
    save_system(fig_tree, path)
    loaded = load_system(path)
    assert loaded == fig_tree


def test_system_dict_rejects_unknown_fields(fig_tree):
    data = system_to_dict(fig_tree)
    data["comment"] = "nope"
    with pytest.raises(InputError, match="comment"):
        system_from_dict(data)
    rule_bad = system_to_dict(fig_tree)
    rule_bad["rules"][0]["weight"] = 2
    with pytest.raises(InputError, match="weight"):
        system_from_dict(rule_bad)


def test_system_dict_missing_field(fig_tree):
    data = system_to_dict(fig_tree)
    del data["goals"]
    with pytest.raises(InputError, match="goals"):
        system_from_dict(data)


def test_system_file_bad_json_has_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"alphabet": ["a"],\n  "rules": [}\n')
    with pytest.raises(InputError, match=r"line 2 column"):
        load_system(path)


def test_system_file_default_matching_modes(tmp_path):
    path = tmp_path / "sys.json"
    path.write_text(json.dumps({
        "alphabet": ["A", "B"],
        "rules": [{"pre": "A", "post": "B"}],
        "initial": ["A"],
        "goals": ["B"],
    }))
    system = load_system(path)
    assert system.rule_match == "substring"
    assert system.goal_match == "exact"
    assert system.max_memory_len == 64
