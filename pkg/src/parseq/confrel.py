"""Symbolic relations on configuration pairs.

Formulas relate a left and a right configuration. Variables are single
bits; conjunction, disjunction, negation and top are first-class but
denotationally equal to their implication/bottom encodings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .core import ACCEPT, REJECT, RESULTS, Automaton, Configuration, slice_bits

LEFT = "<"
RIGHT = ">"
SIDES = (LEFT, RIGHT)


class NotPure(Exception):
    """Raised when a guard body contains state or buffer-length assertions."""


# ---------------------------------------------------------------------------
# Bit expressions


@dataclass(frozen=True)
class BLit:
    bits: str


@dataclass(frozen=True)
class BufRef:
    side: str


@dataclass(frozen=True)
class BHdrRef:
    name: str
    side: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BSlice:
    expr: "BitExpr"
    lo: int
    hi: int


@dataclass(frozen=True)
class BConcat:
    left: "BitExpr"
    right: "BitExpr"


BitExpr = Union[BLit, BufRef, BHdrRef, Var, BSlice, BConcat]


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Eq:
    left: BitExpr
    right: BitExpr


@dataclass(frozen=True)
class StateIs:
    state: str
    side: str


@dataclass(frozen=True)
class BufLenIs:
    length: int
    side: str


@dataclass(frozen=True)
class Implies:
    hyp: "Formula"
    concl: "Formula"


@dataclass(frozen=True)
class And:
    conjuncts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    disjuncts: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


Formula = Union[Bottom, Top, Eq, StateIs, BufLenIs, Implies, And, Or, Not]

BOT = Bottom()
TOP = Top()


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TOP
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return BOT
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


# ---------------------------------------------------------------------------
# Semantics

Valuation = dict[str, str]  # variable name -> single bit


def eval_bit_expr(
    be: BitExpr, cl: Configuration, cr: Configuration, v: Valuation
) -> str:
    if isinstance(be, BLit):
        return be.bits
    if isinstance(be, BufRef):
        return cl.buffer if be.side == LEFT else cr.buffer
    if isinstance(be, BHdrRef):
        c = cl if be.side == LEFT else cr
        return c.store.get(be.name)
    if isinstance(be, Var):
        return v[be.name]
    if isinstance(be, BSlice):
        return slice_bits(eval_bit_expr(be.expr, cl, cr, v), be.lo, be.hi)
    if isinstance(be, BConcat):
        return eval_bit_expr(be.left, cl, cr, v) + eval_bit_expr(be.right, cl, cr, v)
    raise TypeError(f"not a bit expression: {be!r}")


def holds(phi: Formula, cl: Configuration, cr: Configuration, v: Valuation) -> bool:
    if isinstance(phi, Bottom):
        return False
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Eq):
        return eval_bit_expr(phi.left, cl, cr, v) == eval_bit_expr(phi.right, cl, cr, v)
    if isinstance(phi, StateIs):
        c = cl if phi.side == LEFT else cr
        return c.state == phi.state
    if isinstance(phi, BufLenIs):
        c = cl if phi.side == LEFT else cr
        return len(c.buffer) == phi.length
    if isinstance(phi, Implies):
        return (not holds(phi.hyp, cl, cr, v)) or holds(phi.concl, cl, cr, v)
    if isinstance(phi, And):
        return all(holds(p, cl, cr, v) for p in phi.conjuncts)
    if isinstance(phi, Or):
        return any(holds(p, cl, cr, v) for p in phi.disjuncts)
    if isinstance(phi, Not):
        return not holds(phi.body, cl, cr, v)
    raise TypeError(f"not a formula: {phi!r}")


def variables(phi: Formula) -> set[str]:
    out: set[str] = set()

    def be_walk(be: BitExpr) -> None:
        if isinstance(be, Var):
            out.add(be.name)
        elif isinstance(be, BSlice):
            be_walk(be.expr)
        elif isinstance(be, BConcat):
            be_walk(be.left)
            be_walk(be.right)

    def walk(f: Formula) -> None:
        if isinstance(f, Eq):
            be_walk(f.left)
            be_walk(f.right)
        elif isinstance(f, Implies):
            walk(f.hyp)
            walk(f.concl)
        elif isinstance(f, And):
            for p in f.conjuncts:
                walk(p)
        elif isinstance(f, Or):
            for p in f.disjuncts:
                walk(p)
        elif isinstance(f, Not):
            walk(f.body)

    walk(phi)
    return out


def rename_vars(phi: Formula, mapping: dict[str, str]) -> Formula:
    def be(x: BitExpr) -> BitExpr:
        if isinstance(x, Var) and x.name in mapping:
            return Var(mapping[x.name])
        if isinstance(x, BSlice):
            return BSlice(be(x.expr), x.lo, x.hi)
        if isinstance(x, BConcat):
            return BConcat(be(x.left), be(x.right))
        return x

    def walk(f: Formula) -> Formula:
        if isinstance(f, Eq):
            return Eq(be(f.left), be(f.right))
        if isinstance(f, Implies):
            return Implies(walk(f.hyp), walk(f.concl))
        if isinstance(f, And):
            return And(tuple(walk(p) for p in f.conjuncts))
        if isinstance(f, Or):
            return Or(tuple(walk(p) for p in f.disjuncts))
        if isinstance(f, Not):
            return Not(walk(f.body))
        return f

    return walk(phi)


def instantiate_vars(phi: Formula, assignment: dict[str, str]) -> Formula:
    """Replace bit variables by literal bits."""

    def be(x: BitExpr) -> BitExpr:
        if isinstance(x, Var) and x.name in assignment:
            return BLit(assignment[x.name])
        if isinstance(x, BSlice):
            return BSlice(be(x.expr), x.lo, x.hi)
        if isinstance(x, BConcat):
            return BConcat(be(x.left), be(x.right))
        return x

    def walk(f: Formula) -> Formula:
        if isinstance(f, Eq):
            return Eq(be(f.left), be(f.right))
        if isinstance(f, Implies):
            return Implies(walk(f.hyp), walk(f.concl))
        if isinstance(f, And):
            return And(tuple(walk(p) for p in f.conjuncts))
        if isinstance(f, Or):
            return Or(tuple(walk(p) for p in f.disjuncts))
        if isinstance(f, Not):
            return Not(walk(f.body))
        return f

    return walk(phi)


def canonical_vars(phi: Formula, prefix: str = "v") -> Formula:
    """Rename variables to v0, v1, … in first-occurrence order.

    Variables are scoped to one formula (the engine's fresh-variable
    discipline never shares them across relation entries), so renaming
    preserves meaning while making alpha-equivalent formulas equal.
    """
    order: list[str] = []

    def be_walk(x: BitExpr) -> None:
        if isinstance(x, Var) and x.name not in order:
            order.append(x.name)
        elif isinstance(x, BSlice):
            be_walk(x.expr)
        elif isinstance(x, BConcat):
            be_walk(x.left)
            be_walk(x.right)

    def walk(f: Formula) -> None:
        if isinstance(f, Eq):
            be_walk(f.left)
            be_walk(f.right)
        elif isinstance(f, Implies):
            walk(f.hyp)
            walk(f.concl)
        elif isinstance(f, And):
            for p in f.conjuncts:
                walk(p)
        elif isinstance(f, Or):
            for p in f.disjuncts:
                walk(p)
        elif isinstance(f, Not):
            walk(f.body)

    walk(phi)
    return rename_vars(phi, {name: f"{prefix}{i}" for i, name in enumerate(order)})


def denotes(phi: Formula, cl: Configuration, cr: Configuration) -> bool:
    """True iff phi holds under every valuation of its variables."""
    names = sorted(variables(phi))
    for bits in itertools.product("01", repeat=len(names)):
        if not holds(phi, cl, cr, dict(zip(names, bits))):
            return False
    return True


def is_pure(phi: Formula) -> bool:
    if isinstance(phi, (StateIs, BufLenIs)):
        return False
    if isinstance(phi, Implies):
        return is_pure(phi.hyp) and is_pure(phi.concl)
    if isinstance(phi, And):
        return all(is_pure(p) for p in phi.conjuncts)
    if isinstance(phi, Or):
        return all(is_pure(p) for p in phi.disjuncts)
    if isinstance(phi, Not):
        return is_pure(phi.body)
    return True


# ---------------------------------------------------------------------------
# Templates and guarded formulas


@dataclass(frozen=True)
class Template:
    state: str
    buflen: int

    def __str__(self) -> str:
        return f"<{self.state},{self.buflen}>"


T_ACCEPT = Template(ACCEPT, 0)
T_REJECT = Template(REJECT, 0)


def templates_of(aut: Automaton, states: Optional[Iterable[str]] = None) -> list[Template]:
    """All templates whose state lies in ``states`` (default: all user states),
    plus the accept/reject templates."""
    if states is None:
        states = [q for q, _ in aut.states]
    out = []
    for q in states:
        for n in range(aut.opsize_of(q)):
            out.append(Template(q, n))
    out.append(T_ACCEPT)
    out.append(T_REJECT)
    return out


def template_of(c: Configuration) -> Template:
    return Template(c.state, len(c.buffer))


def template_formula(t: Template, side: str) -> Formula:
    return And((StateIs(t.state, side), BufLenIs(t.buflen, side)))


@dataclass(frozen=True)
class Guarded:
    """A template-guarded formula: t1< ∧ t2> ⟹ body, with a pure body."""

    t1: Template
    t2: Template
    body: Formula

    def formula(self) -> Formula:
        return Implies(
            And((template_formula(self.t1, LEFT), template_formula(self.t2, RIGHT))),
            self.body,
        )

    def holds(self, cl: Configuration, cr: Configuration, v: Valuation) -> bool:
        if template_of(cl) != self.t1 or template_of(cr) != self.t2:
            return True
        return holds(self.body, cl, cr, v)

    def denotes(self, cl: Configuration, cr: Configuration) -> bool:
        if template_of(cl) != self.t1 or template_of(cr) != self.t2:
            return True
        return denotes(self.body, cl, cr)


def guard(t1: Template, t2: Template, body: Formula) -> Guarded:
    if not is_pure(body):
        raise NotPure(f"guard body is not pure: {render(body)}")
    return Guarded(t1, t2, body)


# ---------------------------------------------------------------------------
# Substitution


def subst_bit_expr(
    be: BitExpr,
    buf: dict[str, BitExpr],
    hdr: dict[tuple[str, str], BitExpr],
) -> BitExpr:
    """Simultaneous substitution of buffer and header references.

    ``buf`` maps a side to a replacement for that side's buffer;
    ``hdr`` maps (name, side) pairs to replacements.
    """
    if isinstance(be, BufRef) and be.side in buf:
        return buf[be.side]
    if isinstance(be, BHdrRef) and (be.name, be.side) in hdr:
        return hdr[(be.name, be.side)]
    if isinstance(be, BSlice):
        return BSlice(subst_bit_expr(be.expr, buf, hdr), be.lo, be.hi)
    if isinstance(be, BConcat):
        return BConcat(
            subst_bit_expr(be.left, buf, hdr), subst_bit_expr(be.right, buf, hdr)
        )
    return be


def subst(
    phi: Formula,
    buf: dict[str, BitExpr],
    hdr: dict[tuple[str, str], BitExpr],
) -> Formula:
    if isinstance(phi, Eq):
        return Eq(subst_bit_expr(phi.left, buf, hdr), subst_bit_expr(phi.right, buf, hdr))
    if isinstance(phi, Implies):
        return Implies(subst(phi.hyp, buf, hdr), subst(phi.concl, buf, hdr))
    if isinstance(phi, And):
        return And(tuple(subst(p, buf, hdr) for p in phi.conjuncts))
    if isinstance(phi, Or):
        return Or(tuple(subst(p, buf, hdr) for p in phi.disjuncts))
    if isinstance(phi, Not):
        return Not(subst(phi.body, buf, hdr))
    return phi


# ---------------------------------------------------------------------------
# Widths and simplification


class WidthContext:
    """Static widths for bit expressions.

    Header widths come from the automaton; buffer widths, when known,
    from the enclosing guard's templates. Unknown widths are None.
    """

    def __init__(
        self,
        sizes: Optional[dict[str, int]] = None,
        buflens: Optional[dict[str, int]] = None,
    ):
        self.sizes = sizes or {}
        self.buflens = buflens or {}

    @staticmethod
    def for_guard(aut: Automaton, g: Guarded) -> "WidthContext":
        def blen(t: Template) -> int:
            return 0 if t.state in RESULTS else t.buflen

        return WidthContext(aut.sizes, {LEFT: blen(g.t1), RIGHT: blen(g.t2)})

    def width(self, be: BitExpr) -> Optional[int]:
        if isinstance(be, BLit):
            return len(be.bits)
        if isinstance(be, Var):
            return 1
        if isinstance(be, BufRef):
            return self.buflens.get(be.side)
        if isinstance(be, BHdrRef):
            return self.sizes.get(be.name)
        if isinstance(be, BSlice):
            w = self.width(be.expr)
            if w is None:
                return None
            if w == 0:
                return 0
            lo = min(be.lo, w - 1)
            hi = min(be.hi, w - 1)
            return 0 if lo > hi else hi - lo + 1
        if isinstance(be, BConcat):
            wl = self.width(be.left)
            wr = self.width(be.right)
            if wl is None or wr is None:
                return None
            return wl + wr
        raise TypeError(f"not a bit expression: {be!r}")


EMPTY_CTX = WidthContext()


def simplify_bit_expr(be: BitExpr, ctx: WidthContext = EMPTY_CTX) -> BitExpr:
    if isinstance(be, BufRef) and ctx.width(be) == 0:
        return BLit("")
    if isinstance(be, BConcat):
        left = simplify_bit_expr(be.left, ctx)
        right = simplify_bit_expr(be.right, ctx)
        if isinstance(left, BLit) and not left.bits:
            return right
        if isinstance(right, BLit) and not right.bits:
            return left
        if isinstance(left, BLit) and isinstance(right, BLit):
            return BLit(left.bits + right.bits)
        return BConcat(left, right)
    if isinstance(be, BSlice):
        inner = simplify_bit_expr(be.expr, ctx)
        lo, hi = be.lo, be.hi
        w = ctx.width(inner)
        if w is not None:
            if w == 0:
                return BLit("")
            lo = min(lo, w - 1)
            hi = min(hi, w - 1)
            if lo == 0 and hi == w - 1:
                return inner
        if isinstance(inner, BLit):
            return BLit(slice_bits(inner.bits, lo, hi))
        # slice of concat: distribute when the split point is known
        if isinstance(inner, BConcat):
            wl = ctx.width(inner.left)
            if wl is not None and w is not None:
                if hi < wl:
                    return simplify_bit_expr(BSlice(inner.left, lo, hi), ctx)
                if lo >= wl:
                    return simplify_bit_expr(BSlice(inner.right, lo - wl, hi - wl), ctx)
                return simplify_bit_expr(
                    BConcat(
                        BSlice(inner.left, lo, wl - 1),
                        BSlice(inner.right, 0, hi - wl),
                    ),
                    ctx,
                )
        # nested slices compose
        if isinstance(inner, BSlice):
            wi = ctx.width(inner.expr)
            if wi is not None:
                ilo = min(inner.lo, wi - 1) if wi else 0
                return simplify_bit_expr(
                    BSlice(inner.expr, ilo + lo, ilo + hi), ctx
                )
        return BSlice(inner, lo, hi)
    return be


def simplify(phi: Formula, ctx: WidthContext = EMPTY_CTX) -> Formula:
    """Semantics-preserving local rewriting (smart constructors)."""
    if isinstance(phi, Eq):
        left = simplify_bit_expr(phi.left, ctx)
        right = simplify_bit_expr(phi.right, ctx)
        if left == right:
            return TOP
        if isinstance(left, BLit) and isinstance(right, BLit):
            return TOP if left.bits == right.bits else BOT
        wl, wr = ctx.width(left), ctx.width(right)
        if wl is not None and wr is not None and wl != wr:
            return BOT
        return Eq(left, right)
    if isinstance(phi, Implies):
        hyp = simplify(phi.hyp, ctx)
        concl = simplify(phi.concl, ctx)
        if isinstance(hyp, Bottom) or isinstance(concl, Top):
            return TOP
        if isinstance(hyp, Top):
            return concl
        if isinstance(concl, Bottom):
            return simplify(Not(hyp), ctx) if not isinstance(hyp, Not) else hyp.body
        return Implies(hyp, concl)
    if isinstance(phi, And):
        parts: list[Formula] = []
        for p in phi.conjuncts:
            p = simplify(p, ctx)
            if isinstance(p, Bottom):
                return BOT
            if isinstance(p, Top):
                continue
            if isinstance(p, And):
                parts.extend(p.conjuncts)
            elif p not in parts:
                parts.append(p)
        return conj(parts)
    if isinstance(phi, Or):
        parts = []
        for p in phi.disjuncts:
            p = simplify(p, ctx)
            if isinstance(p, Top):
                return TOP
            if isinstance(p, Bottom):
                continue
            if isinstance(p, Or):
                parts.extend(p.disjuncts)
            elif p not in parts:
                parts.append(p)
        return disj(parts)
    if isinstance(phi, Not):
        body = simplify(phi.body, ctx)
        if isinstance(body, Bottom):
            return TOP
        if isinstance(body, Top):
            return BOT
        if isinstance(body, Not):
            return body.body
        return Not(body)
    return phi


def simplify_guarded(g: Guarded, aut: Automaton) -> Guarded:
    return Guarded(g.t1, g.t2, simplify(g.body, WidthContext.for_guard(aut, g)))


# ---------------------------------------------------------------------------
# Rendering (deterministic, diffable)


def render_bit_expr(be: BitExpr) -> str:
    if isinstance(be, BLit):
        return f'"{be.bits}"'
    if isinstance(be, BufRef):
        return f"buf{be.side}"
    if isinstance(be, BHdrRef):
        return f"{be.name}{be.side}"
    if isinstance(be, Var):
        return be.name
    if isinstance(be, BSlice):
        return f"{render_bit_expr(be.expr)}[{be.lo}:{be.hi}]"
    if isinstance(be, BConcat):
        return f"({render_bit_expr(be.left)} ++ {render_bit_expr(be.right)})"
    raise TypeError(f"not a bit expression: {be!r}")


def render(phi: Formula) -> str:
    if isinstance(phi, Bottom):
        return "false"
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Eq):
        return f"{render_bit_expr(phi.left)} = {render_bit_expr(phi.right)}"
    if isinstance(phi, StateIs):
        return f"state{phi.side}({phi.state})"
    if isinstance(phi, BufLenIs):
        return f"buflen{phi.side}({phi.length})"
    if isinstance(phi, Implies):
        return f"({render(phi.hyp)} => {render(phi.concl)})"
    if isinstance(phi, And):
        return "(" + " & ".join(render(p) for p in phi.conjuncts) + ")"
    if isinstance(phi, Or):
        return "(" + " | ".join(render(p) for p in phi.disjuncts) + ")"
    if isinstance(phi, Not):
        return f"!{render(phi.body)}"
    raise TypeError(f"not a formula: {phi!r}")


def render_guarded(g: Guarded) -> str:
    return f"[{g.t1} {g.t2}] {render(g.body)}"
