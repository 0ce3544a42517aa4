"""The bundled CDCL solver against a brute-force truth table."""

import itertools
import random

from parseq.sat import Solver


def brute_force(n_vars, clauses):
    for bits in itertools.product((False, True), repeat=n_vars):
        if all(
            any(bits[abs(l) - 1] == (l > 0) for l in clause) for clause in clauses
        ):
            return True
    return False


def random_cnf(rng, max_vars=6, max_clauses=14):
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(0, max_clauses)):
        width = rng.randint(1, 3)
        clause = [rng.choice([-1, 1]) * rng.randint(1, n) for _ in range(width)]
        clauses.append(clause)
    return n, clauses


class TestSolver:
    def test_empty_is_sat(self):
        assert Solver().solve()

    def test_unit_conflict(self):
        s = Solver()
        v = s.new_var()
        s.add_clause([v])
        s.add_clause([-v])
        assert not s.solve()

    def test_model_satisfies_formula(self):
        s = Solver()
        a, b, c = (s.new_var() for _ in range(3))
        clauses = [[a, b], [-a, c], [-b, -c], [a, -b]]
        for cl in clauses:
            s.add_clause(cl)
        assert s.solve()
        m = s.model()
        assert all(any(m[abs(l)] == (l > 0) for l in cl) for cl in clauses)

    def test_agrees_with_truth_table(self, rng):
        for trial in range(150):
            n, clauses = random_cnf(rng)
            s = Solver()
            for _ in range(n):
                s.new_var()
            for cl in clauses:
                s.add_clause(cl)
            got = s.solve()
            assert got == brute_force(n, clauses), (trial, n, clauses)
            if got:
                m = s.model()
                assert all(
                    any(m[abs(l)] == (l > 0) for l in cl) for cl in clauses
                )

    def test_pigeonhole_3_into_2_unsat(self):
        # p[i][j]: pigeon i sits in hole j
        s = Solver()
        p = [[s.new_var() for _ in range(2)] for _ in range(3)]
        for i in range(3):
            s.add_clause(p[i])
        for j in range(2):
            for i1 in range(3):
                for i2 in range(i1 + 1, 3):
                    s.add_clause([-p[i1][j], -p[i2][j]])
        assert not s.solve()
