import random

import pytest

from parseq import fixture_path, load
from parseq.smt import SolverConfig


FIXTURE_PAIRS = [
    # (left file, left state, right file, right state, expected verdict)
    ("mpls_ref", "q1", "mpls_vec", "q3", "Equivalent"),
    ("ip_ref", "parse_ip", "ip_combined", "parse_combined", "Equivalent"),
    ("vlan", "parse_eth", "vlan", "parse_eth", "Equivalent"),
    ("sloppy", "parse_eth", "strict", "parse_eth", "NotEquivalent"),
    ("mpls_ref_small", "q1", "mpls_vec_small", "q3", "Equivalent"),
    ("sloppy_small", "parse_eth", "strict_small", "parse_eth", "NotEquivalent"),
    ("ipopt_generic", "parse_0", "ipopt_timestamp", "parse_0", "Equivalent"),
]

ALL_FIXTURES = [
    "mpls_ref",
    "mpls_vec",
    "mpls_ref_small",
    "mpls_vec_small",
    "ip_ref",
    "ip_combined",
    "vlan",
    "sloppy",
    "strict",
    "sloppy_small",
    "strict_small",
    "ipopt_generic",
    "ipopt_timestamp",
]


# filled in by the acceptance tests; echoed after the run so the
# one-line-per-criterion verdicts survive output capturing
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return random.Random(20260825)


@pytest.fixture
def enum_config():
    return SolverConfig(backend="enum")


@pytest.fixture
def internal_config():
    return SolverConfig(backend="internal")


def load_fixture(name):
    return load(fixture_path(name))
