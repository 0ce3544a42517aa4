"""Entailment pipeline: filtering, bitvector translation, backends."""

import pytest

from _gen import random_entailment
from parseq.core import Automaton, Extract, Goto, State
from parseq.confrel import (
    BOT,
    LEFT,
    RIGHT,
    TOP,
    BLit,
    BSlice,
    BufLenIs,
    BufRef,
    Eq,
    Guarded,
    StateIs,
    Template,
    Var,
)
from parseq.smt import (
    EnumTooLarge,
    FbNot,
    FilteredEntailment,
    InternalError,
    SolverConfig,
    SolverFailure,
    builtin_solver_command,
    check_sat,
    decide_by_enumeration,
    decide_entailment,
    decide_filtered,
    enum_bits,
    find_solver,
    serialize_smtlib,
    solve_smtlib,
    template_filter,
    to_fol_bv,
)


def tiny_automaton():
    return Automaton(
        (("h", 2),),
        (("Q0", State((Extract("h"),), Goto("accept"))),),
    )


T0 = Template("Q0", 0)
T1 = Template("Q0", 1)


class TestTemplateFilter:
    def test_keeps_matching_guards_only(self):
        g = Guarded(T0, T1, TOP)
        rel = [
            Guarded(T0, T1, Eq(BufRef(RIGHT), BLit("0"))),
            Guarded(T1, T0, BOT),
            Guarded(T0, T0, BOT),
        ]
        ent = template_filter(rel, g)
        assert ent.premises == (rel[0].body,)
        assert ent.conclusion == TOP

    def test_no_matches_leaves_conclusion_alone(self):
        ent = template_filter([], Guarded(T0, T1, BOT))
        assert ent.premises == ()
        assert ent.conclusion == BOT


class TestTranslation:
    def test_premiseless_query_is_negated_conclusion(self):
        aut = tiny_automaton()
        ent = FilteredEntailment(T0, T0, (), TOP)
        out = to_fol_bv(ent, aut)
        assert len(out) == 1
        assert isinstance(out[0], FbNot)

    def test_zero_width_buffer_never_declared(self):
        aut = tiny_automaton()
        ent = FilteredEntailment(T0, T0, (), Eq(BufRef(LEFT), BufRef(RIGHT)))
        text = serialize_smtlib(to_fol_bv(ent, aut))
        assert "buf" not in text

    def test_impure_formula_is_an_internal_error(self):
        aut = tiny_automaton()
        for bad in (StateIs("Q0", LEFT), BufLenIs(0, RIGHT)):
            ent = FilteredEntailment(T0, T0, (), bad)
            with pytest.raises(InternalError):
                to_fol_bv(ent, aut)

    def test_premise_variables_are_expanded(self):
        # forall x. buf> = x  is unsatisfiable as a premise, so anything follows
        aut = tiny_automaton()
        ent = FilteredEntailment(
            T0, T1, (Eq(BufRef(RIGHT), Var("x")),), BOT
        )
        assert not check_sat(to_fol_bv(ent, aut))  # unsat == entailment valid
        assert decide_by_enumeration(ent, aut)

    def test_serialization_is_deterministic(self):
        aut = tiny_automaton()
        ent = FilteredEntailment(
            T1,
            T1,
            (Eq(BufRef(LEFT), BufRef(RIGHT)),),
            Eq(BSlice(BufRef(LEFT), 0, 0), BSlice(BufRef(RIGHT), 0, 0)),
        )
        a = serialize_smtlib(to_fol_bv(ent, aut), comment="probe")
        b = serialize_smtlib(to_fol_bv(ent, aut), comment="probe")
        assert a == b
        assert a.startswith("; probe\n(set-logic QF_BV)")

    def test_golden_smtlib_layout(self):
        aut = tiny_automaton()
        ent = FilteredEntailment(
            T1,
            T1,
            (Eq(BufRef(LEFT), BufRef(RIGHT)),),
            Eq(BSlice(BufRef(LEFT), 0, 0), BSlice(BufRef(RIGHT), 0, 0)),
        )
        assert serialize_smtlib(to_fol_bv(ent, aut)) == (
            "(set-logic QF_BV)\n"
            "(declare-const bufL (_ BitVec 1))\n"
            "(declare-const bufR (_ BitVec 1))\n"
            "(assert (= bufL bufR))\n"
            "(assert (not (= bufL bufR)))\n"
            "(check-sat)\n"
        )


class TestEnumeration:
    def test_slice_entailment_from_equality(self):
        # buf< = buf>  entails  buf<[0:0] = buf>[0:0]  at 2-bit buffers
        aut = Automaton(
            (("h", 3),),
            (("Q0", State((Extract("h"),), Goto("accept"))),),
        )
        t = Template("Q0", 2)
        ent = FilteredEntailment(
            t,
            t,
            (Eq(BufRef(LEFT), BufRef(RIGHT)),),
            Eq(BSlice(BufRef(LEFT), 0, 0), BSlice(BufRef(RIGHT), 0, 0)),
        )
        assert decide_by_enumeration(ent, aut)
        flipped = FilteredEntailment(
            t,
            t,
            (Eq(BSlice(BufRef(LEFT), 0, 0), BSlice(BufRef(RIGHT), 0, 0)),),
            Eq(BufRef(LEFT), BufRef(RIGHT)),
        )
        assert not decide_by_enumeration(flipped, aut)

    def test_budget_enforced(self):
        aut = tiny_automaton()
        ent = FilteredEntailment(
            T1, T1, (), Eq(BufRef(LEFT), BufRef(RIGHT))
        )
        assert enum_bits(ent, aut) == 2
        with pytest.raises(EnumTooLarge):
            decide_by_enumeration(ent, aut, threshold=1)


class TestDualPath:
    def test_internal_matches_enumeration_on_500_cases(self, rng):
        config = SolverConfig(backend="internal")
        for i in range(500):
            ent, aut = random_entailment(rng)
            want = decide_by_enumeration(ent, aut)
            assert decide_filtered(ent, aut, config) == want, i

    def test_subprocess_matches_enumeration_spot_checks(self, rng):
        config = SolverConfig(backend="subprocess", command=builtin_solver_command())
        for i in range(12):
            ent, aut = random_entailment(rng)
            assert decide_filtered(ent, aut, config) == decide_by_enumeration(ent, aut)


class TestSolverDriver:
    def test_trivial_scripts(self):
        cmd = builtin_solver_command()
        assert solve_smtlib("(assert false)(check-sat)", cmd) == "unsat"
        assert solve_smtlib("(assert true)(check-sat)", cmd) == "sat"

    def test_garbage_output_is_a_failure(self):
        with pytest.raises(SolverFailure):
            solve_smtlib("(check-sat)", ("echo", "maybe"))

    def test_empty_output_is_a_failure(self):
        with pytest.raises(SolverFailure):
            solve_smtlib("(check-sat)", ("true",))

    def test_missing_executable_is_a_failure(self):
        with pytest.raises(SolverFailure):
            solve_smtlib("(check-sat)", ("/nonexistent/solver",))

    def test_unknown_token_is_not_a_verdict(self):
        # the strict driver passes "unknown" through; deciding on it must fail
        assert solve_smtlib("(check-sat)", ("echo", "unknown")) == "unknown"
        aut = tiny_automaton()
        ent = FilteredEntailment(T0, T0, (), BOT)
        config = SolverConfig(backend="subprocess", command=("echo", "unknown"))
        with pytest.raises(SolverFailure):
            decide_filtered(ent, aut, config)

    def test_find_solver_auto_falls_back_to_builtin(self):
        # no external SMT solver is installed in this environment
        cmd = find_solver("auto")
        assert cmd == builtin_solver_command() or cmd[0].endswith(
            ("z3", "cvc4", "boolector")
        )

    def test_find_solver_unknown_name(self):
        with pytest.raises(SolverFailure):
            find_solver("definitely-not-a-solver")


class TestDecideEntailment:
    def test_bottom_premise_entails_anything(self, enum_config):
        aut = tiny_automaton()
        rel = [Guarded(T0, T1, BOT)]
        goal = Guarded(T0, T1, Eq(BufRef(RIGHT), BLit("1")))
        assert decide_entailment(rel, goal, aut, enum_config)

    def test_reflexive(self, internal_config):
        aut = tiny_automaton()
        g = Guarded(T0, T1, Eq(BufRef(RIGHT), BLit("1")))
        assert decide_entailment([g], g, aut, internal_config)

    def test_top_goal_without_solver(self):
        aut = tiny_automaton()
        config = SolverConfig(backend="subprocess", command=("/nonexistent",))
        assert decide_entailment([], Guarded(T0, T0, TOP), aut, config)

    def test_dump_dir_receives_queries(self, tmp_path, internal_config):
        aut = tiny_automaton()
        internal_config.dump_dir = str(tmp_path)
        g = Guarded(T0, T1, Eq(BufRef(RIGHT), BLit("1")))
        decide_entailment([], g, aut, internal_config)
        files = list(tmp_path.glob("*_query.smt2"))
        assert len(files) == 1
        assert files[0].read_text().startswith(";")
