"""Template-level abstract interpretation of the step function.

Templates abstract configurations to (state, buffer length); sigma
over-approximates single-bit successors, sigma_leap its multi-bit
variant, and reach_fixpoint closes a seed set of template pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .core import RESULTS, Automaton, select_targets
from .confrel import T_REJECT, Template, templates_of


@dataclass(frozen=True)
class TemplatePair:
    left: Template
    right: Template


def sigma(t: Template, aut: Automaton) -> set[Template]:
    """Abstract single-bit successors of a template."""
    if t.state in RESULTS:
        return {T_REJECT}
    size = aut.opsize_of(t.state)
    if t.buflen + 1 < size:
        return {Template(t.state, t.buflen + 1)}
    targets = select_targets(aut.state(t.state).trans)
    return {Template(q, 0) for q in targets}


def leap_size(t1: Template, t2: Template, aut: Automaton) -> int:
    """Steps until the next state-to-state transition on either side."""
    def remaining(t: Template) -> Optional[int]:
        if t.state in RESULTS:
            return None
        return aut.opsize_of(t.state) - t.buflen

    r1, r2 = remaining(t1), remaining(t2)
    if r1 is None and r2 is None:
        return 1
    if r2 is None:
        return r1
    if r1 is None:
        return r2
    return min(r1, r2)


def sigma_side(t: Template, k: int, aut: Automaton) -> set[Template]:
    """Abstract successors of one side after k single-bit steps.

    Assumes k does not exceed the side's remaining bits (guaranteed when
    k is the leap size of a pair containing t).
    """
    if t.state in RESULTS:
        return {T_REJECT}
    size = aut.opsize_of(t.state)
    remaining = size - t.buflen
    if k < remaining:
        return {Template(t.state, t.buflen + k)}
    if k == remaining:
        targets = select_targets(aut.state(t.state).trans)
        return {Template(q, 0) for q in targets}
    raise ValueError(f"leap of {k} overshoots template {t} (remaining {remaining})")


def sigma_leap(p: TemplatePair, aut: Automaton) -> set[TemplatePair]:
    k = leap_size(p.left, p.right, aut)
    return {
        TemplatePair(l, r)
        for l in sigma_side(p.left, k, aut)
        for r in sigma_side(p.right, k, aut)
    }


@dataclass(frozen=True)
class ReachSet:
    pairs: frozenset[TemplatePair]
    seeds: frozenset[TemplatePair]

    def __contains__(self, p: TemplatePair) -> bool:
        return p in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def sorted(self) -> list[TemplatePair]:
        return sorted(self.pairs, key=lambda p: (str(p.left), str(p.right)))

    def dump(self) -> str:
        return "\n".join(f"{p.left} {p.right}" for p in self.sorted())


def reach_fixpoint(
    seeds: Iterable[TemplatePair], aut: Automaton, leaps: bool = True
) -> ReachSet:
    """Least template-pair set containing the seeds and closed under the
    chosen successor relation. Worklist order is sorted for determinism."""
    seeds = frozenset(seeds)
    seen: set[TemplatePair] = set(seeds)
    worklist = sorted(seeds, key=lambda p: (str(p.left), str(p.right)))
    while worklist:
        p = worklist.pop(0)
        if leaps:
            succs = sigma_leap(p, aut)
        else:
            succs = {
                TemplatePair(l, r)
                for l in sigma(p.left, aut)
                for r in sigma(p.right, aut)
            }
        fresh = sorted(
            succs - seen, key=lambda q: (str(q.left), str(q.right))
        )
        seen.update(fresh)
        worklist.extend(fresh)
    return ReachSet(frozenset(seen), seeds)


def all_template_pairs(
    aut: Automaton, left_states: Iterable[str], right_states: Iterable[str]
) -> ReachSet:
    """The unpruned pair space: every valid left template against every
    valid right template (used when reach pruning is disabled)."""
    lts = templates_of(aut, list(left_states))
    rts = templates_of(aut, list(right_states))
    pairs = frozenset(TemplatePair(l, r) for l in lts for r in rts)
    return ReachSet(pairs, pairs)
