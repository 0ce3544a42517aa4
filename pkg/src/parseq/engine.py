"""Symbolic equivalence checking by weakest-precondition saturation.

Starting from the requirement that no reachable template pair mixes
acceptance with non-acceptance, the engine grows a candidate relation R
by popping proof obligations from a FIFO frontier: an obligation already
entailed by R (at its guard) is skipped, otherwise it joins R and its
weakest preconditions join the frontier. On a drained frontier the
verdict reduces to whether the initial configurations satisfy R.

A solver failure is never interpreted; it aborts the run with an
Inconclusive result carrying the reason.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .core import Automaton, disjoint_sum
from .confrel import (
    BOT,
    TOP,
    Formula,
    Guarded,
    T_ACCEPT,
    Template,
    Top,
    canonical_vars,
    guard,
    render,
    render_guarded,
)
from .reach import ReachSet, TemplatePair, all_template_pairs, reach_fixpoint
from .smt import SolverConfig, SolverFailure, decide_entailment
from .wp import FreshVars, wp

EQUIVALENT = "Equivalent"
NOT_EQUIVALENT = "NotEquivalent"
INCONCLUSIVE = "Inconclusive"


class EngineError(Exception):
    """The saturation loop exceeded its iteration safety bound."""


@dataclass
class Stats:
    iterations: int = 0
    skips: int = 0
    extends: int = 0
    solver_calls: int = 0
    wall_time: float = 0.0

    def summary(self) -> str:
        return (
            f"iterations={self.iterations} skips={self.skips} "
            f"extends={self.extends} solver_calls={self.solver_calls} "
            f"wall_time={self.wall_time:.2f}s"
        )


@dataclass(frozen=True)
class Entry:
    guarded: Guarded
    origin: str  # "init", "given", or "wp of #<k>"


@dataclass
class Witness:
    """The accumulated relation, with per-conjunct provenance."""

    entries: list[Entry] = field(default_factory=list)

    def formulas(self) -> list[Guarded]:
        return [e.guarded for e in self.entries]

    def to_text(self, header: str = "") -> str:
        lines = [f"; {ln}" for ln in header.splitlines()]
        for k, e in enumerate(self.entries):
            lines.append(f"#{k} {render_guarded(e.guarded)}  ({e.origin})")
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self, meta: Optional[dict] = None) -> str:
        return json.dumps(
            {
                "meta": meta or {},
                "relation": [
                    {
                        "index": k,
                        "left": str(e.guarded.t1),
                        "right": str(e.guarded.t2),
                        "body": render(e.guarded.body),
                        "origin": e.origin,
                    }
                    for k, e in enumerate(self.entries)
                ],
            },
            indent=2,
        )


@dataclass
class Result:
    verdict: str
    reason: str = ""
    witness: Optional[Witness] = None
    stats: Stats = field(default_factory=Stats)
    reach: Optional[ReachSet] = None


def mixed_acceptance(p: TemplatePair) -> bool:
    return (p.left == T_ACCEPT) != (p.right == T_ACCEPT)


def init_relation(reach: ReachSet) -> list[Guarded]:
    """One falsum obligation per reachable pair mixing acceptance."""
    return [
        guard(p.left, p.right, BOT)
        for p in reach.sorted()
        if mixed_acceptance(p)
    ]


def entailment(
    rel: Iterable[Guarded], psi: Guarded, aut: Automaton, config: SolverConfig
) -> bool:
    """Does the conjunction of ``rel`` entail ``psi``? (Skip test.)"""
    return decide_entailment(rel, psi, aut, config)


def final_check(
    phi_extra: Formula,
    rel: Iterable[Guarded],
    t1: Template,
    t2: Template,
    aut: Automaton,
    config: SolverConfig,
) -> tuple[bool, str]:
    """Do all initial configuration pairs (satisfying phi_extra) satisfy
    the relation? Conjuncts guarded elsewhere hold vacuously at the
    initial templates, so one solver call per matching conjunct suffices."""
    premises = [] if isinstance(phi_extra, Top) else [Guarded(t1, t2, phi_extra)]
    for k, r in enumerate(rel):
        if r.t1 != t1 or r.t2 != t2:
            continue
        if not decide_entailment(premises, r, aut, config):
            return False, f"initial configurations violate #{k}: {render_guarded(r)}"
    return True, ""


def _reach_for(
    aut: Automaton, t1: Template, t2: Template, leaps: bool, use_reach: bool
) -> ReachSet:
    seed = TemplatePair(t1, t2)
    if use_reach:
        return reach_fixpoint({seed}, aut, leaps=leaps)
    names = [q for q, _ in aut.states]
    full = all_template_pairs(aut, names, names)
    return ReachSet(full.pairs | {seed}, frozenset({seed}))


def pre_bisimulation(
    aut: Automaton,
    q1: str,
    q2: str,
    config: Optional[SolverConfig] = None,
    leaps: bool = True,
    use_reach: bool = True,
    phi_extra: Formula = TOP,
    i_extra: Iterable[Guarded] = (),
    debug_check: Optional[Callable[[list[Guarded], list[Guarded]], None]] = None,
) -> Result:
    """Worklist saturation over two start states of one automaton.

    phi_extra strengthens the initial formula (pure, interpreted at the
    initial templates); i_extra adds guarded obligations to the initial
    frontier. Both default to the plain equivalence query.
    """
    config = config or SolverConfig()
    t_init1, t_init2 = Template(q1, 0), Template(q2, 0)
    stats = Stats()
    start = time.monotonic()
    reach = _reach_for(aut, t_init1, t_init2, leaps, use_reach)
    witness = Witness()
    fresh = FreshVars()
    frontier: deque[tuple[Guarded, str]] = deque()
    enqueued: set[Guarded] = set()

    def push(g: Guarded, origin: str) -> None:
        # Fresh variables are formula-local, so renaming them canonically
        # makes alpha-equivalent obligations syntactically equal: repeated
        # preconditions of a loop dedup here instead of growing R forever.
        g = Guarded(g.t1, g.t2, canonical_vars(g.body))
        if g not in enqueued:
            enqueued.add(g)
            frontier.append((g, origin))

    for g in init_relation(reach):
        push(g, "init")
    for g in i_extra:
        push(g, "given")
    bound = (len(reach) + len(frontier) + 1) * (len(reach) + 1) * 20

    def done(result: Result) -> Result:
        stats.wall_time = time.monotonic() - start
        result.stats = stats
        result.witness = witness
        result.reach = reach
        return result

    try:
        while frontier:
            stats.iterations += 1
            if stats.iterations > bound:
                raise EngineError(
                    f"no saturation after {stats.iterations} iterations"
                )
            phi, origin = frontier.popleft()
            stats.solver_calls += 1
            if entailment(witness.formulas(), phi, aut, config):
                stats.skips += 1
            else:
                index = len(witness.entries)
                witness.entries.append(Entry(phi, origin))
                stats.extends += 1
                for g in wp(phi, reach, aut, fresh, leaps=leaps):
                    push(g, f"wp of #{index}")
            if debug_check is not None:
                debug_check(witness.formulas(), [g for g, _ in frontier])
        stats.solver_calls += sum(
            1
            for e in witness.entries
            if e.guarded.t1 == t_init1 and e.guarded.t2 == t_init2
        )
        ok, why = final_check(
            phi_extra, witness.formulas(), t_init1, t_init2, aut, config
        )
        if ok:
            return done(Result(EQUIVALENT))
        return done(Result(NOT_EQUIVALENT, reason=why))
    except SolverFailure as exc:
        return done(Result(INCONCLUSIVE, reason=str(exc)))


def check_states(
    aut: Automaton,
    q1: str,
    q2: str,
    config: Optional[SolverConfig] = None,
    leaps: bool = True,
    use_reach: bool = True,
) -> Result:
    """Decide language equivalence of two start states of one automaton."""
    return pre_bisimulation(
        aut, q1, q2, config=config, leaps=leaps, use_reach=use_reach
    )


def check_equivalence(
    a1: Automaton,
    q1: str,
    a2: Automaton,
    q2: str,
    config: Optional[SolverConfig] = None,
    leaps: bool = True,
    use_reach: bool = True,
) -> Result:
    """Decide language equivalence of states of two separate automata.

    Initial stores are unconstrained on both sides, so Equivalent means
    the languages agree for every pair of initial stores.
    """
    total, left, right = disjoint_sum(a1, a2)
    return check_states(
        total,
        left.states[q1],
        right.states[q2],
        config=config,
        leaps=leaps,
        use_reach=use_reach,
    )


def check_with_relation(
    a1: Automaton,
    q1: str,
    a2: Automaton,
    q2: str,
    phi_extra: Formula = TOP,
    i_extra: Iterable[Guarded] = (),
    config: Optional[SolverConfig] = None,
    leaps: bool = True,
    use_reach: bool = True,
) -> Result:
    """The saturation loop under a strengthened initial relation.

    phi_extra (pure, over the summed automaton's headers at the initial
    templates) restricts which initial store pairs must satisfy the
    computed relation; i_extra seeds extra obligations. Equivalent then
    means: the computed relation is a bisimulation candidate and every
    initial pair satisfying phi_extra is in it — what that implies about
    the original automata is up to the chosen relation.
    """
    total, left, right = disjoint_sum(a1, a2)
    return pre_bisimulation(
        total,
        left.states[q1],
        right.states[q2],
        config=config,
        leaps=leaps,
        use_reach=use_reach,
        phi_extra=phi_extra,
        i_extra=i_extra,
    )
