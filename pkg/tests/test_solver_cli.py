"""The bundled SMT-LIB solver: parsing and end-to-end agreement."""

import io
import subprocess
import sys

from _gen import random_entailment
from parseq.smt import check_sat, serialize_smtlib, to_fol_bv
from parseq.solver_cli import run_script


def run(text):
    out = io.StringIO()
    code = run_script(text, out=out)
    return code, out.getvalue().strip()


class TestScripts:
    def test_trivial(self):
        assert run("(assert true)(check-sat)")[1] == "sat"
        assert run("(assert false)(check-sat)")[1] == "unsat"

    def test_declarations_and_equality(self):
        text = (
            "(set-logic QF_BV)"
            "(declare-const a (_ BitVec 2))"
            "(declare-const b (_ BitVec 2))"
            "(assert (= a b))"
            "(assert (not (= a #b01)))"
            "(check-sat)"
        )
        assert run(text)[1] == "sat"

    def test_extract_and_concat(self):
        text = (
            "(declare-const a (_ BitVec 4))"
            "(assert (= a (concat #b10 #b01)))"
            "(assert (= ((_ extract 3 2) a) #b10))"
            "(check-sat)"
        )
        assert run(text)[1] == "sat"
        contradiction = text.replace("extract 3 2) a) #b10", "extract 3 2) a) #b01")
        assert run(contradiction)[1] == "unsat"

    def test_hex_literals(self):
        text = "(declare-const a (_ BitVec 8))(assert (= a #x5a))(check-sat)"
        assert run(text)[1] == "sat"
        text = "(assert (= #x5a #b01011010))(check-sat)"
        assert run(text)[1] == "sat"

    def test_implication_right_fold(self):
        assert run("(assert (=> true false true))(check-sat)")[1] == "sat"
        assert run("(assert (not (=> false true)))(check-sat)")[1] == "unsat"

    def test_unparseable_input_reports_unknown(self):
        code, out = run("(assert (bvadd x y))(check-sat)")
        assert out == "unknown"

    def test_comments_and_options_ignored(self):
        text = "; header\n(set-option :produce-models true)(assert true)(check-sat)\n(exit)"
        assert run(text)[1] == "sat"


class TestAgreement:
    def test_round_trip_matches_in_process_blaster(self, rng):
        for _ in range(40):
            ent, aut = random_entailment(rng)
            assertions = to_fol_bv(ent, aut)
            text = serialize_smtlib(assertions)
            _, token = run(text)
            assert token == ("sat" if check_sat(assertions) else "unsat")

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "parseq.solver_cli"],
            input="(assert false)(check-sat)",
            capture_output=True,
            text=True,
        )
        assert proc.stdout.strip() == "unsat"
