"""Weakest preconditions over the symbolic relation language.

The per-side transformer rewinds one single-bit step of one side of a
configuration pair; the paired transformer composes the right and left
sides over one shared input bit (or, with leaps, over a shared sequence
of bits covering the steps up to the next state transition).
"""

from __future__ import annotations

from typing import Optional

from . import core
from .core import RESULTS, Automaton, Assign, Extract, Goto, Select
from .confrel import (
    BOT,
    TOP,
    BConcat,
    BHdrRef,
    BLit,
    BSlice,
    BitExpr,
    BufRef,
    Eq,
    Formula,
    Guarded,
    Implies,
    Not,
    Template,
    Top,
    Var,
    WidthContext,
    conj,
    disj,
    simplify,
    subst,
    variables,
)
from .reach import ReachSet, TemplatePair, leap_size

SymbolicStore = dict[str, BitExpr]


class WidthError(Exception):
    pass


class FreshnessError(Exception):
    pass


class FreshVars:
    """Monotonic fresh-variable source, scoped to one engine run."""

    def __init__(self, prefix: str = "x"):
        self.prefix = prefix
        self.count = 0

    def __call__(self) -> str:
        name = f"{self.prefix}{self.count}"
        self.count += 1
        return name


def identity_store(aut: Automaton, side: str) -> SymbolicStore:
    return {h: BHdrRef(h, side) for h, _ in aut.headers}


def expr_to_bit_expr(e: core.Expr, st: SymbolicStore) -> BitExpr:
    """Translate an automaton expression, reading headers from a symbolic store."""
    if isinstance(e, core.HdrRef):
        return st[e.name]
    if isinstance(e, core.Lit):
        return BLit(e.bits)
    if isinstance(e, core.Slice):
        return BSlice(expr_to_bit_expr(e.expr, st), e.lo, e.hi)
    if isinstance(e, core.Concat):
        return BConcat(expr_to_bit_expr(e.left, st), expr_to_bit_expr(e.right, st))
    raise TypeError(f"not an expression: {e!r}")


def symbolic_exec_op(
    op: tuple[core.Stmt, ...],
    pre: SymbolicStore,
    buf: BitExpr,
    buf_width: int,
    aut: Automaton,
) -> SymbolicStore:
    """Post-state header bindings after running a block on symbolic input.

    ``buf_width`` must equal the block's opsize; extracts bind successive
    slices of ``buf``, assigns see earlier bindings.
    """
    if buf_width != core.opsize(op, aut):
        raise WidthError(f"buffer width {buf_width} != opsize {core.opsize(op, aut)}")
    sizes = aut.sizes
    st = dict(pre)
    offset = 0
    for stmt in op:
        if isinstance(stmt, Extract):
            sz = sizes[stmt.header]
            st[stmt.header] = BSlice(buf, offset, offset + sz - 1)
            offset += sz
        else:
            assert isinstance(stmt, Assign)
            st[stmt.header] = expr_to_bit_expr(stmt.expr, st)
    return st


def symbolic_trans_cond(
    tz: core.TransBlock, st: SymbolicStore, target: str
) -> Formula:
    """Pure formula holding exactly when the transition routes to ``target``."""
    if isinstance(tz, Goto):
        return TOP if tz.target == target else BOT
    assert isinstance(tz, Select)
    exprs = [expr_to_bit_expr(e, st) for e in tz.exprs]

    def full_match(case: core.Case) -> Formula:
        eqs = [
            Eq(ex, BLit(pat.bits))
            for ex, pat in zip(exprs, case.patterns)
            if isinstance(pat, core.ExactPat)
        ]
        return conj(eqs)

    arms: list[Formula] = []
    earlier: list[Formula] = []
    for case in tz.cases:
        m = full_match(case)
        if case.target == target:
            arms.append(conj([m] + [Not(e) for e in earlier]))
        earlier.append(m)
    if target == core.REJECT:
        arms.append(conj([Not(e) for e in earlier]))
    return disj(arms)


def wp_side(
    phi: Formula,
    side: str,
    t_src: Template,
    t_dst: Template,
    x: str,
    aut: Automaton,
    check_fresh: bool = True,
) -> Formula:
    """Rewind one single-bit step of one side.

    Returns a pure formula psi such that, for configurations c on the
    given side matching t_src, c satisfies psi (for all values of the
    read bit x) exactly when every one-bit successor of c matching t_dst
    satisfies phi. The paired transformer shares x between both sides
    and disables the freshness check for the second application.
    """
    if check_fresh and x in variables(phi):
        raise FreshnessError(f"{x} is not fresh")
    if t_src.state in RESULTS:
        if t_dst != Template(core.REJECT, 0):
            return TOP
        return subst(phi, {side: BLit("")}, {})
    size = aut.opsize_of(t_src.state)
    remaining = size - t_src.buflen
    if remaining > 1:
        # buffering edge: the read bit is appended to this side's buffer
        if t_dst != Template(t_src.state, t_src.buflen + 1):
            return TOP
        return subst(phi, {side: BConcat(BufRef(side), Var(x))}, {})
    # transition edge: the read bit completes the buffer
    if t_dst.buflen != 0 or t_dst.state not in core.select_targets(
        aut.state(t_src.state).trans
    ):
        return TOP
    st = aut.state(t_src.state)
    full_buf = BConcat(BufRef(side), Var(x))
    post = symbolic_exec_op(st.op, identity_store(aut, side), full_buf, size, aut)
    cond = symbolic_trans_cond(st.trans, post, t_dst.state)
    phi2 = subst(
        phi, {side: BLit("")}, {(h, side): post[h] for h, _ in aut.headers}
    )
    return Implies(cond, phi2)


def template_chain(
    t_src: Template, k: int, t_end: Template, aut: Automaton
) -> Optional[list[Template]]:
    """The forced k-step template path of one side, or None when no path
    from t_src can end at t_end."""
    if t_src.state in RESULTS:
        if t_end != Template(core.REJECT, 0):
            return None
        return [t_src] + [Template(core.REJECT, 0)] * k
    size = aut.opsize_of(t_src.state)
    remaining = size - t_src.buflen
    if k > remaining:
        raise ValueError(f"leap of {k} overshoots template {t_src}")
    prefix = [Template(t_src.state, t_src.buflen + i) for i in range(k)]
    if k < remaining:
        if t_end != Template(t_src.state, t_src.buflen + k):
            return None
        return prefix + [t_end]
    if t_end.buflen != 0 or t_end.state not in core.select_targets(
        aut.state(t_src.state).trans
    ):
        return None
    return prefix + [t_end]


def wp(
    psig: Guarded,
    reach_set: ReachSet,
    aut: Automaton,
    fresh: FreshVars,
    leaps: bool = True,
) -> list[Guarded]:
    """Template-guarded weakest preconditions of a guarded formula, one
    per reachable predecessor pair that can actually step into psig's
    guard; vacuous entries simplify to true and are dropped."""
    out: list[Guarded] = []
    for pair in reach_set.sorted():
        k = leap_size(pair.left, pair.right, aut) if leaps else 1
        chain_l = template_chain(pair.left, k, psig.t1, aut)
        chain_r = template_chain(pair.right, k, psig.t2, aut)
        if chain_l is None or chain_r is None:
            continue
        xs = [fresh() for _ in range(k)]
        body_vars = variables(psig.body)
        if any(x in body_vars for x in xs):
            raise FreshnessError("fresh-variable counter collided with formula")
        phi = psig.body
        for i in range(k, 0, -1):
            phi = wp_side(phi, ">", chain_r[i - 1], chain_r[i], xs[i - 1], aut)
            phi = wp_side(
                phi, "<", chain_l[i - 1], chain_l[i], xs[i - 1], aut, check_fresh=False
            )
        g = Guarded(pair.left, pair.right, phi)
        phi = simplify(phi, WidthContext.for_guard(aut, g))
        if isinstance(phi, Top):
            continue
        out.append(Guarded(pair.left, pair.right, phi))
    return out
