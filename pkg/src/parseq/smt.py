"""Entailment checking for template-guarded formulas.

An entailment "R entails g" between guarded formulas reduces, after
filtering R down to the conjuncts sharing g's guard, to validity of a
pure implication in which buffer widths are fixed by the guard. That
implication is translated to quantifier-free bitvector logic and
discharged either by exhaustive enumeration (small instances), by an
in-process bit-blasting SAT backend, or by an external SMT-LIB solver
run as a subprocess. A solver answer other than sat/unsat is never
interpreted; it surfaces as SolverFailure.
"""

from __future__ import annotations

import itertools
import os
import re
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .core import Automaton, Configuration, Store
from .confrel import (
    LEFT,
    RIGHT,
    And,
    BConcat,
    BHdrRef,
    BLit,
    BSlice,
    Bottom,
    BufLenIs,
    BufRef,
    Eq,
    Formula,
    Guarded,
    Implies,
    Not,
    Or,
    StateIs,
    Template,
    Top,
    Var,
    BitExpr,
    WidthContext,
    denotes,
    instantiate_vars,
    render_guarded,
    simplify,
    variables,
)
from . import sat


class InternalError(Exception):
    """A formula reached the bitvector translation that should have been
    eliminated earlier (state or buffer-length assertions)."""


class SolverFailure(Exception):
    """The solver did not produce a usable sat/unsat answer."""


class EnumTooLarge(Exception):
    """The enumeration backend was asked for more bits than its budget."""


# ---------------------------------------------------------------------------
# Quantifier-free bitvector terms and formulas


@dataclass(frozen=True)
class FbVar:
    name: str
    width: int


@dataclass(frozen=True)
class FbLit:
    bits: str


@dataclass(frozen=True)
class FbExtract:
    term: "FbTerm"
    lo: int  # leftmost-bit-is-0 indexing, inclusive
    hi: int


@dataclass(frozen=True)
class FbConcat:
    left: "FbTerm"
    right: "FbTerm"


FbTerm = Union[FbVar, FbLit, FbExtract, FbConcat]


@dataclass(frozen=True)
class FbTrue:
    pass


@dataclass(frozen=True)
class FbFalse:
    pass


@dataclass(frozen=True)
class FbEq:
    left: FbTerm
    right: FbTerm


@dataclass(frozen=True)
class FbNot:
    body: "FbFormula"


@dataclass(frozen=True)
class FbAnd:
    parts: tuple["FbFormula", ...]


@dataclass(frozen=True)
class FbOr:
    parts: tuple["FbFormula", ...]


@dataclass(frozen=True)
class FbImplies:
    hyp: "FbFormula"
    concl: "FbFormula"


FbFormula = Union[FbTrue, FbFalse, FbEq, FbNot, FbAnd, FbOr, FbImplies]

FB_TRUE = FbTrue()
FB_FALSE = FbFalse()


def fb_width(t: FbTerm) -> int:
    if isinstance(t, FbVar):
        return t.width
    if isinstance(t, FbLit):
        return len(t.bits)
    if isinstance(t, FbExtract):
        return t.hi - t.lo + 1
    if isinstance(t, FbConcat):
        return fb_width(t.left) + fb_width(t.right)
    raise TypeError(f"not a term: {t!r}")


def fb_vars(f: FbFormula) -> dict[str, int]:
    out: dict[str, int] = {}

    def t_walk(t: FbTerm) -> None:
        if isinstance(t, FbVar):
            out[t.name] = t.width
        elif isinstance(t, FbExtract):
            t_walk(t.term)
        elif isinstance(t, FbConcat):
            t_walk(t.left)
            t_walk(t.right)

    def walk(g: FbFormula) -> None:
        if isinstance(g, FbEq):
            t_walk(g.left)
            t_walk(g.right)
        elif isinstance(g, FbNot):
            walk(g.body)
        elif isinstance(g, (FbAnd, FbOr)):
            for p in g.parts:
                walk(p)
        elif isinstance(g, FbImplies):
            walk(g.hyp)
            walk(g.concl)

    walk(f)
    return out


# ---------------------------------------------------------------------------
# Filtered entailments


@dataclass(frozen=True)
class FilteredEntailment:
    """premises |= conclusion at a fixed template pair."""

    t1: Template
    t2: Template
    premises: tuple[Formula, ...]
    conclusion: Formula


def template_filter(rel: Iterable[Guarded], goal: Guarded) -> FilteredEntailment:
    """Keep the conjuncts of ``rel`` guarded by the goal's templates.

    Conjuncts with a different guard are vacuous on configurations
    matching the goal's guard, so dropping them preserves the entailment
    and leaves a formula over a single fixed buffer-width assignment.
    """
    premises = tuple(
        r.body for r in rel if r.t1 == goal.t1 and r.t2 == goal.t2
    )
    return FilteredEntailment(goal.t1, goal.t2, premises, goal.body)


def entailment_context(ent: FilteredEntailment, aut: Automaton) -> WidthContext:
    return WidthContext.for_guard(aut, Guarded(ent.t1, ent.t2, ent.conclusion))


# ---------------------------------------------------------------------------
# Translation to bitvector logic

_SANE = re.compile(r"[^A-Za-z0-9_]")


def _name_table(formulas: Iterable[Formula]) -> dict[tuple[str, str], str]:
    """Deterministic, collision-free SMT names for header references."""
    refs: set[tuple[str, str]] = set()

    def t_walk(be: BitExpr) -> None:
        if isinstance(be, BHdrRef):
            refs.add((be.name, be.side))
        elif isinstance(be, BSlice):
            t_walk(be.expr)
        elif isinstance(be, BConcat):
            t_walk(be.left)
            t_walk(be.right)

    def walk(f: Formula) -> None:
        if isinstance(f, Eq):
            t_walk(f.left)
            t_walk(f.right)
        elif isinstance(f, Implies):
            walk(f.hyp)
            walk(f.concl)
        elif isinstance(f, (And, Or)):
            parts = f.conjuncts if isinstance(f, And) else f.disjuncts
            for p in parts:
                walk(p)
        elif isinstance(f, Not):
            walk(f.body)

    for f in formulas:
        walk(f)
    table: dict[tuple[str, str], str] = {}
    used: set[str] = {"bufL", "bufR"}
    for name, side in sorted(refs):
        base = ("L_" if side == LEFT else "R_") + _SANE.sub("_", name)
        cand, n = base, 1
        while cand in used:
            n += 1
            cand = f"{base}_{n}"
        used.add(cand)
        table[(name, side)] = cand
    return table


def _bv_term(
    be: BitExpr, ctx: WidthContext, names: dict[tuple[str, str], str]
) -> FbTerm:
    if isinstance(be, BLit):
        return FbLit(be.bits)
    if isinstance(be, BufRef):
        w = ctx.width(be)
        if w is None:
            raise InternalError(f"unknown buffer width for side {be.side!r}")
        if w == 0:
            return FbLit("")
        return FbVar("bufL" if be.side == LEFT else "bufR", w)
    if isinstance(be, BHdrRef):
        w = ctx.width(be)
        if w is None:
            raise InternalError(f"unknown header {be.name!r}")
        return FbVar(names[(be.name, be.side)], w)
    if isinstance(be, Var):
        return FbVar(f"v_{be.name}", 1)
    if isinstance(be, BSlice):
        inner = _bv_term(be.expr, ctx, names)
        w = fb_width(inner)
        if w == 0:
            return FbLit("")
        lo = min(be.lo, w - 1)
        hi = min(be.hi, w - 1)
        if lo == 0 and hi == w - 1:
            return inner
        return FbExtract(inner, lo, hi)
    if isinstance(be, BConcat):
        left = _bv_term(be.left, ctx, names)
        right = _bv_term(be.right, ctx, names)
        if fb_width(left) == 0:
            return right
        if fb_width(right) == 0:
            return left
        return FbConcat(left, right)
    raise TypeError(f"not a bit expression: {be!r}")


def _bv_formula(
    phi: Formula, ctx: WidthContext, names: dict[tuple[str, str], str]
) -> FbFormula:
    if isinstance(phi, Bottom):
        return FB_FALSE
    if isinstance(phi, Top):
        return FB_TRUE
    if isinstance(phi, (StateIs, BufLenIs)):
        raise InternalError(f"impure formula survived filtering: {phi!r}")
    if isinstance(phi, Eq):
        left = _bv_term(phi.left, ctx, names)
        right = _bv_term(phi.right, ctx, names)
        wl, wr = fb_width(left), fb_width(right)
        if wl != wr:
            return FB_FALSE
        if wl == 0:
            return FB_TRUE
        return FbEq(left, right)
    if isinstance(phi, Implies):
        return FbImplies(_bv_formula(phi.hyp, ctx, names), _bv_formula(phi.concl, ctx, names))
    if isinstance(phi, And):
        return FbAnd(tuple(_bv_formula(p, ctx, names) for p in phi.conjuncts))
    if isinstance(phi, Or):
        return FbOr(tuple(_bv_formula(p, ctx, names) for p in phi.disjuncts))
    if isinstance(phi, Not):
        return FbNot(_bv_formula(phi.body, ctx, names))
    raise TypeError(f"not a formula: {phi!r}")


# Each formula's bit variables are universally quantified over that formula
# alone. The conclusion's become free (skolemized by the negation); a premise's
# are eliminated by expanding every assignment, keeping the logic
# quantifier-free and the check exact. Premises with more variables than this
# bound keep them free instead — still sound for the entailment, just weaker,
# which can only cause extra Extend steps.
PREMISE_EXPANSION_LIMIT = 8


def _premise_instances(p: Formula, ctx: WidthContext) -> list[Formula]:
    names = sorted(variables(p))
    if not names or len(names) > PREMISE_EXPANSION_LIMIT:
        return [p]
    out = []
    for bits in itertools.product("01", repeat=len(names)):
        inst = simplify(instantiate_vars(p, dict(zip(names, bits))), ctx)
        if not isinstance(inst, Top):
            out.append(inst)
    return out


def to_fol_bv(ent: FilteredEntailment, aut: Automaton) -> list[FbFormula]:
    """Assertions whose joint unsatisfiability is the entailment's validity:
    every premise (expanded over its variables) plus the negated conclusion."""
    ctx = entailment_context(ent, aut)
    names = _name_table(list(ent.premises) + [ent.conclusion])
    out = []
    for p in ent.premises:
        for inst in _premise_instances(p, ctx):
            out.append(_bv_formula(inst, ctx, names))
    out.append(FbNot(_bv_formula(ent.conclusion, ctx, names)))
    return out


# ---------------------------------------------------------------------------
# SMT-LIB serialization


def _smt_term(t: FbTerm) -> str:
    if isinstance(t, FbVar):
        return t.name
    if isinstance(t, FbLit):
        return "#b" + t.bits
    if isinstance(t, FbExtract):
        w = fb_width(t.term)
        # our bit i is SMT bit (w - 1 - i)
        return f"((_ extract {w - 1 - t.lo} {w - 1 - t.hi}) {_smt_term(t.term)})"
    if isinstance(t, FbConcat):
        return f"(concat {_smt_term(t.left)} {_smt_term(t.right)})"
    raise TypeError(f"not a term: {t!r}")


def _smt_formula(f: FbFormula) -> str:
    if isinstance(f, FbTrue):
        return "true"
    if isinstance(f, FbFalse):
        return "false"
    if isinstance(f, FbEq):
        return f"(= {_smt_term(f.left)} {_smt_term(f.right)})"
    if isinstance(f, FbNot):
        return f"(not {_smt_formula(f.body)})"
    if isinstance(f, FbAnd):
        if not f.parts:
            return "true"
        return "(and " + " ".join(_smt_formula(p) for p in f.parts) + ")"
    if isinstance(f, FbOr):
        if not f.parts:
            return "false"
        return "(or " + " ".join(_smt_formula(p) for p in f.parts) + ")"
    if isinstance(f, FbImplies):
        return f"(=> {_smt_formula(f.hyp)} {_smt_formula(f.concl)})"
    raise TypeError(f"not a formula: {f!r}")


def serialize_smtlib(assertions: list[FbFormula], comment: str = "") -> str:
    """SMT-LIB v2 script: unsat means the negated query was valid."""
    decls: dict[str, int] = {}
    for f in assertions:
        for name, w in fb_vars(f).items():
            if decls.setdefault(name, w) != w:
                raise InternalError(f"variable {name} used at widths {decls[name]} and {w}")
    lines = []
    if comment:
        for ln in comment.splitlines():
            lines.append(f"; {ln}")
    lines.append("(set-logic QF_BV)")
    for name in sorted(decls):
        lines.append(f"(declare-const {name} (_ BitVec {decls[name]}))")
    for f in assertions:
        lines.append(f"(assert {_smt_formula(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Bit blasting


class Blaster:
    """Tseitin encoding of bitvector formulas into a SAT solver."""

    def __init__(self):
        self.sat = sat.Solver()
        self.true_lit = self.sat.new_var()
        self.sat.add_clause([self.true_lit])
        self.env: dict[str, list[int]] = {}

    def var_bits(self, name: str, width: int) -> list[int]:
        bits = self.env.get(name)
        if bits is None:
            bits = [self.sat.new_var() for _ in range(width)]
            self.env[name] = bits
        if len(bits) != width:
            raise InternalError(f"variable {name} used at widths {len(bits)} and {width}")
        return bits

    def term(self, t: FbTerm) -> list[int]:
        if isinstance(t, FbVar):
            return self.var_bits(t.name, t.width)
        if isinstance(t, FbLit):
            return [self.true_lit if b == "1" else -self.true_lit for b in t.bits]
        if isinstance(t, FbExtract):
            return self.term(t.term)[t.lo : t.hi + 1]
        if isinstance(t, FbConcat):
            return self.term(t.left) + self.term(t.right)
        raise TypeError(f"not a term: {t!r}")

    def _iff(self, a: int, b: int) -> int:
        o = self.sat.new_var()
        self.sat.add_clause([-o, -a, b])
        self.sat.add_clause([-o, a, -b])
        self.sat.add_clause([o, a, b])
        self.sat.add_clause([o, -a, -b])
        return o

    def _and(self, lits: list[int]) -> int:
        if not lits:
            return self.true_lit
        if len(lits) == 1:
            return lits[0]
        o = self.sat.new_var()
        for lit in lits:
            self.sat.add_clause([-o, lit])
        self.sat.add_clause([o] + [-lit for lit in lits])
        return o

    def _or(self, lits: list[int]) -> int:
        return -self._and([-lit for lit in lits])

    def formula(self, f: FbFormula) -> int:
        if isinstance(f, FbTrue):
            return self.true_lit
        if isinstance(f, FbFalse):
            return -self.true_lit
        if isinstance(f, FbEq):
            lb, rb = self.term(f.left), self.term(f.right)
            if len(lb) != len(rb):
                return -self.true_lit
            return self._and([self._iff(a, b) for a, b in zip(lb, rb)])
        if isinstance(f, FbNot):
            return -self.formula(f.body)
        if isinstance(f, FbAnd):
            return self._and([self.formula(p) for p in f.parts])
        if isinstance(f, FbOr):
            return self._or([self.formula(p) for p in f.parts])
        if isinstance(f, FbImplies):
            return self._or([-self.formula(f.hyp), self.formula(f.concl)])
        raise TypeError(f"not a formula: {f!r}")


def check_sat(assertions: list[FbFormula]) -> bool:
    """Satisfiability of the conjunction, by bit blasting."""
    bl = Blaster()
    for f in assertions:
        bl.sat.add_clause([bl.formula(f)])
    return bl.sat.solve()


# ---------------------------------------------------------------------------
# Solver configuration and subprocess driver


def builtin_solver_command() -> tuple[str, ...]:
    return (sys.executable, "-m", "parseq.solver_cli")


_KNOWN_SOLVERS = {
    "z3": ("z3", "-in", "-smt2"),
    "cvc4": ("cvc4", "--lang", "smt2"),
    "boolector": ("boolector", "--smt2"),
}


def find_solver(name: str = "auto", path: Optional[str] = None) -> tuple[str, ...]:
    """Command line for an SMT-LIB solver reading from stdin."""
    if name == "auto":
        for cand, cmd in _KNOWN_SOLVERS.items():
            exe = shutil.which(cmd[0])
            if exe:
                return (exe,) + cmd[1:]
        return builtin_solver_command()
    if name == "builtin":
        return builtin_solver_command()
    if name in _KNOWN_SOLVERS:
        cmd = _KNOWN_SOLVERS[name]
        exe = path or shutil.which(cmd[0])
        if exe is None:
            raise SolverFailure(f"solver {name!r} not found on PATH")
        return (exe,) + cmd[1:]
    raise SolverFailure(f"unknown solver {name!r}")


@dataclass
class SolverConfig:
    """How entailments get discharged.

    backend is one of "enum" (exhaustive valuation enumeration),
    "internal" (in-process bit blasting) or "subprocess" (SMT-LIB over
    a pipe to ``command``). enum_fallback short-circuits small queries
    through enumeration regardless of backend.
    """

    backend: str = "internal"
    command: Optional[tuple[str, ...]] = None
    timeout: float = 60.0
    dump_dir: Optional[str] = None
    enum_fallback: bool = False
    enum_threshold: int = 16
    _dump_count: int = field(default=0, repr=False)

    def dump(self, text: str) -> None:
        if not self.dump_dir:
            return
        os.makedirs(self.dump_dir, exist_ok=True)
        self._dump_count += 1
        path = os.path.join(self.dump_dir, f"{self._dump_count:04d}_query.smt2")
        with open(path, "w") as fh:
            fh.write(text)


def solve_smtlib(text: str, command: tuple[str, ...], timeout: float = 60.0) -> str:
    """Run a solver subprocess on a script.

    Returns exactly "sat", "unsat" or "unknown". Anything else — a
    crash, garbage output, a timeout — raises SolverFailure. Leniency
    here would turn solver noise into verdicts.
    """
    try:
        proc = subprocess.run(
            list(command),
            input=text,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise SolverFailure(f"solver did not run: {exc}") from exc
    token = None
    for line in proc.stdout.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        token = line
        break
    if token not in ("sat", "unsat", "unknown"):
        raise SolverFailure(
            f"unusable solver output {token!r} (exit {proc.returncode}, "
            f"stderr {proc.stderr.strip()!r})"
        )
    return token


# ---------------------------------------------------------------------------
# Enumeration backend


def _enum_domain(ent: FilteredEntailment, aut: Automaton):
    """Referenced configuration bits: headers per side plus buffers."""
    formulas = list(ent.premises) + [ent.conclusion]
    hdrs: set[tuple[str, str]] = set()
    bufs: set[str] = set()

    def t_walk(be: BitExpr) -> None:
        if isinstance(be, BHdrRef):
            hdrs.add((be.name, be.side))
        elif isinstance(be, BufRef):
            bufs.add(be.side)
        elif isinstance(be, BSlice):
            t_walk(be.expr)
        elif isinstance(be, BConcat):
            t_walk(be.left)
            t_walk(be.right)

    def walk(f: Formula) -> None:
        if isinstance(f, Eq):
            t_walk(f.left)
            t_walk(f.right)
        elif isinstance(f, Implies):
            walk(f.hyp)
            walk(f.concl)
        elif isinstance(f, (And, Or)):
            for p in f.conjuncts if isinstance(f, And) else f.disjuncts:
                walk(p)
        elif isinstance(f, Not):
            walk(f.body)

    for f in formulas:
        walk(f)
    ctx = entailment_context(ent, aut)
    slots: list[tuple[str, str, int]] = []  # (kind, key, width)
    for name, side in sorted(hdrs):
        slots.append(("hdr", f"{side}{name}", ctx.sizes[name]))
    for side in sorted(bufs):
        slots.append(("buf", side, ctx.buflens[side]))
    return slots


def enum_bits(ent: FilteredEntailment, aut: Automaton) -> int:
    """Exponent of the enumeration cost: configuration bits plus the
    largest per-formula variable count (variables quantify per formula,
    so only the widest inner enumeration compounds the outer one)."""
    slots = _enum_domain(ent, aut)
    formulas = list(ent.premises) + [ent.conclusion]
    widest = max((len(variables(f)) for f in formulas), default=0)
    return sum(w for _, _, w in slots) + widest


def decide_by_enumeration(
    ent: FilteredEntailment, aut: Automaton, threshold: Optional[int] = None
) -> bool:
    """Entailment validity by brute force: every assignment of the
    referenced configuration bits, with each formula's own bit variables
    universally quantified inside (via denotes)."""
    slots = _enum_domain(ent, aut)
    total = sum(w for _, _, w in slots)
    if threshold is not None and enum_bits(ent, aut) > threshold:
        raise EnumTooLarge(
            f"{enum_bits(ent, aut)} bits exceeds enumeration budget {threshold}"
        )
    for bits in itertools.product("01", repeat=total):
        w = "".join(bits)
        pos = 0
        stores = {LEFT: {}, RIGHT: {}}
        buffers = {LEFT: "", RIGHT: ""}
        for kind, key, width in slots:
            chunk, pos = w[pos : pos + width], pos + width
            if kind == "hdr":
                side, name = key[0], key[1:]
                stores[side][name] = chunk
            else:
                buffers[key] = chunk
        cl = Configuration(ent.t1.state, Store.of(stores[LEFT]), buffers[LEFT])
        cr = Configuration(ent.t2.state, Store.of(stores[RIGHT]), buffers[RIGHT])
        if all(denotes(p, cl, cr) for p in ent.premises) and not denotes(
            ent.conclusion, cl, cr
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# Top-level entailment interface


def decide_filtered(
    ent: FilteredEntailment, aut: Automaton, config: SolverConfig
) -> bool:
    """Validity of a filtered entailment via the configured backend."""
    if config.enum_fallback and enum_bits(ent, aut) <= config.enum_threshold:
        return decide_by_enumeration(ent, aut)
    if config.backend == "enum":
        return decide_by_enumeration(ent, aut, threshold=None)
    assertions = to_fol_bv(ent, aut)
    if config.backend == "internal":
        if config.dump_dir:
            config.dump(serialize_smtlib(assertions, comment=_provenance(ent)))
        return not check_sat(assertions)
    if config.backend == "subprocess":
        text = serialize_smtlib(assertions, comment=_provenance(ent))
        config.dump(text)
        command = config.command or builtin_solver_command()
        answer = solve_smtlib(text, command, config.timeout)
        if answer == "unknown":
            raise SolverFailure("solver returned unknown")
        return answer == "unsat"
    raise SolverFailure(f"unknown backend {config.backend!r}")


def _provenance(ent: FilteredEntailment) -> str:
    return (
        f"entailment at guard [{ent.t1} {ent.t2}], "
        f"{len(ent.premises)} premise(s); unsat means valid"
    )


def decide_entailment(
    rel: Iterable[Guarded], goal: Guarded, aut: Automaton, config: SolverConfig
) -> bool:
    """Does the conjunction of ``rel`` entail the guarded formula ``goal``?"""
    ctx = WidthContext.for_guard(aut, goal)
    goal = Guarded(goal.t1, goal.t2, simplify(goal.body, ctx))
    rel = [Guarded(r.t1, r.t2, simplify(r.body, ctx)) for r in rel
           if r.t1 == goal.t1 and r.t2 == goal.t2]
    if isinstance(goal.body, Top):
        return True
    ent = template_filter(rel, goal)
    return decide_filtered(ent, aut, config)


entails = decide_entailment
