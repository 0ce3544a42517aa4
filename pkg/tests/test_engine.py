"""The saturation loop: verdicts, witnesses, failure handling."""

import json

import pytest

from _gen import random_automaton
from conftest import FIXTURE_PAIRS, load_fixture
from parseq.core import Automaton, Extract, Goto, State, disjoint_sum
from parseq.confrel import BOT, TOP, Guarded, Template, T_ACCEPT, T_REJECT
from parseq.engine import (
    EQUIVALENT,
    INCONCLUSIVE,
    NOT_EQUIVALENT,
    Witness,
    check_equivalence,
    check_states,
    check_with_relation,
    init_relation,
    mixed_acceptance,
    pre_bisimulation,
)
from parseq.reach import ReachSet, TemplatePair
from parseq.smt import SolverConfig


def chain_automaton():
    return Automaton(
        (("h", 1),),
        (
            ("A", State((Extract("h"),), Goto("B"))),
            ("B", State((Extract("h"),), Goto("accept"))),
        ),
    )


class TestInitRelation:
    def test_mixed_acceptance(self):
        t = Template("A", 0)
        assert mixed_acceptance(TemplatePair(T_ACCEPT, T_REJECT))
        assert mixed_acceptance(TemplatePair(t, T_ACCEPT))
        assert not mixed_acceptance(TemplatePair(T_ACCEPT, T_ACCEPT))
        assert not mixed_acceptance(TemplatePair(t, T_REJECT))

    def test_one_falsum_per_mixed_pair(self):
        pairs = frozenset(
            {
                TemplatePair(T_ACCEPT, T_REJECT),
                TemplatePair(T_ACCEPT, T_ACCEPT),
                TemplatePair(Template("A", 0), T_ACCEPT),
            }
        )
        rel = init_relation(ReachSet(pairs, pairs))
        assert len(rel) == 2
        assert all(g.body == BOT for g in rel)


class TestVerdicts:
    def test_identity(self, rng, internal_config):
        for _ in range(5):
            aut = random_automaton(rng)
            q = aut.states[0][0]
            res = check_equivalence(aut, q, aut, q, config=internal_config)
            assert res.verdict == EQUIVALENT

    def test_same_automaton_both_states(self, internal_config):
        aut = chain_automaton()
        res = check_states(
            disjoint_sum(aut, aut)[0], "l:A", "r:B", config=internal_config
        )
        assert res.verdict == NOT_EQUIVALENT
        assert res.reason

    def test_fixture_verdicts(self, internal_config):
        for lf, lq, rf, rq, want in FIXTURE_PAIRS:
            res = check_equivalence(
                load_fixture(lf), lq, load_fixture(rf), rq, config=internal_config
            )
            assert res.verdict == want, (lf, rf, res.reason)

    def test_backends_agree(self, rng):
        for _ in range(20):
            a1 = random_automaton(rng)
            a2 = random_automaton(rng)
            q1, q2 = a1.states[0][0], a2.states[0][0]
            verdicts = {
                check_equivalence(
                    a1, q1, a2, q2, config=SolverConfig(backend=b)
                ).verdict
                for b in ("enum", "internal")
            }
            assert len(verdicts) == 1


class TestWitness:
    def test_witness_is_deterministic(self, internal_config):
        left = load_fixture("mpls_ref_small")
        right = load_fixture("mpls_vec_small")
        texts = set()
        for _ in range(3):
            res = check_equivalence(
                left, "q1", right, "q3", config=SolverConfig(backend="internal")
            )
            texts.add(res.witness.to_text("hdr"))
        assert len(texts) == 1
        assert next(iter(texts)).startswith("; hdr\n#0 ")

    def test_witness_json_shape(self, internal_config):
        res = check_equivalence(
            chain_automaton(), "A", chain_automaton(), "A", config=internal_config
        )
        doc = json.loads(res.witness.to_json({"query": "probe"}))
        assert doc["meta"]["query"] == "probe"
        assert all(
            {"index", "left", "right", "body", "origin"} <= set(e) for e in doc["relation"]
        )

    def test_empty_witness_renders_empty(self):
        assert Witness().to_text() == ""


class TestFailureHandling:
    def test_solver_failure_is_inconclusive(self):
        config = SolverConfig(backend="subprocess", command=("echo", "unknown"))
        res = check_equivalence(
            chain_automaton(), "A", chain_automaton(), "B", config=config
        )
        assert res.verdict == INCONCLUSIVE
        assert "unknown" in res.reason

    def test_crashing_solver_is_inconclusive(self):
        config = SolverConfig(backend="subprocess", command=("/nonexistent/solver",))
        res = check_equivalence(
            chain_automaton(), "A", chain_automaton(), "B", config=config
        )
        assert res.verdict == INCONCLUSIVE

    def test_stats_are_populated(self, internal_config):
        res = check_equivalence(
            chain_automaton(), "A", chain_automaton(), "A", config=internal_config
        )
        s = res.stats
        assert s.iterations == s.skips + s.extends
        assert s.solver_calls >= s.iterations
        assert "iterations=" in s.summary()


class TestLoopInvariants:
    def test_debug_check_sees_monotone_relation(self, rng, enum_config):
        aut = random_automaton(rng)
        total, left, right = disjoint_sum(aut, aut)
        q = left.states[aut.states[0][0]]
        p = right.states[aut.states[0][0]]
        sizes = []

        def dbg(rel, frontier):
            # R only grows, and frontier entries are deduplicated
            sizes.append(len(rel))
            assert len(frontier) == len(set(frontier))

        res = pre_bisimulation(total, q, p, config=enum_config, debug_check=dbg)
        assert res.verdict == EQUIVALENT
        assert sizes == sorted(sizes)

    def test_no_reach_visits_superset(self, rng, enum_config):
        for _ in range(10):
            a1 = random_automaton(rng)
            a2 = random_automaton(rng)
            q1, q2 = a1.states[0][0], a2.states[0][0]
            pruned = check_equivalence(
                a1, q1, a2, q2, config=enum_config, use_reach=True
            )
            full = check_equivalence(
                a1, q1, a2, q2, config=enum_config, use_reach=False
            )
            assert pruned.verdict == full.verdict
            assert pruned.reach.pairs <= full.reach.pairs


class TestWithRelation:
    def test_empty_extras_match_plain_check(self, internal_config):
        aut = chain_automaton()
        plain = check_equivalence(aut, "A", aut, "A", config=internal_config)
        seeded = check_with_relation(aut, "A", aut, "A", config=internal_config)
        assert plain.verdict == seeded.verdict == EQUIVALENT

    def test_contradictory_filter_is_vacuously_equivalent(self, internal_config):
        aut = chain_automaton()
        res = check_with_relation(
            aut, "A", aut, "B", phi_extra=BOT, config=internal_config
        )
        assert res.verdict == EQUIVALENT

    def test_extra_obligations_can_break_equivalence(self, internal_config):
        aut = chain_automaton()
        total, left, right = disjoint_sum(aut, aut)
        bad = Guarded(
            Template(left.states["A"], 0), Template(right.states["A"], 0), BOT
        )
        res = check_with_relation(
            aut, "A", aut, "A", i_extra=[bad], config=internal_config
        )
        assert res.verdict == NOT_EQUIVALENT
