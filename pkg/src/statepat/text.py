"""Textual DSL for model files (`.scm`) and TCTL-lite queries (`.q`).

The grammar is line oriented (see docs/dsl.md); `#` starts a comment, LF is
the canonical line ending.  ``parse_model`` and ``serialize_model`` are exact
inverses on valid models, modulo source spans.
"""
from __future__ import annotations

import re
from typing import Optional

from .model import (
    Action,
    Arith,
    Assign,
    BoolLit,
    BoolOp,
    Compare,
    EventTrigger,
    Expr,
    IntLit,
    InterfaceDecl,
    Model,
    NativeCall,
    Not,
    Query,
    QueryMode,
    RaiseEvent,
    SourceSpan,
    StateAtom,
    Statechart,
    TimeTrigger,
    Transition,
    VarDecl,
    VarRef,
)

KEYWORDS = {
    "model", "in", "event", "var", "order", "pattern", "chart", "priority",
    "manager", "initial", "state", "transition", "on", "after", "if", "do",
    "raise", "true", "false", "int",
}

_TOKEN_RE = re.compile(
    r"""
      (?P<time>\d+s\b)
    | (?P<int>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>->|<=|>=|==|!=|&&|\|\||\.\.|[<>!=+\-()\[\],:;.])
    | (?P<ws>[ \t]+)
    | (?P<comment>\#[^\n]*)
    | (?P<nl>\n)
    | (?P<bad>.)
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind: str, value: str, line: int, col: int):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col, max(1, len(self.value)))

    def __repr__(self) -> str:
        return f"Token({self.kind!r}, {self.value!r}, {self.line}:{self.col})"


class ParseError(Exception):
    """Raised on malformed input, carrying the offending location."""

    def __init__(self, message: str, span: SourceSpan, expected: tuple[str, ...] = ()):
        super().__init__(f"{span.line}:{span.column}: {message}")
        self.message = message
        self.span = span
        self.expected = expected


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        value = m.group()
        if kind == "bad":
            raise ParseError(f"unexpected character {value!r}", SourceSpan(line, col))
        if kind == "nl":
            if tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            col = 1
            continue
        if kind not in ("ws", "comment"):
            if kind == "ident":
                tokens.append(Token("IDENT", value, line, col))
            elif kind == "int":
                tokens.append(Token("INT", value, line, col))
            elif kind == "time":
                tokens.append(Token("TIME", value, line, col))
            else:
                tokens.append(Token(value, value, line, col))
        col += len(value)
    if tokens and tokens[-1].kind != "NEWLINE":
        tokens.append(Token("NEWLINE", "\n", line, col))
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != "EOF":
            self._pos += 1
        return tok

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.current
        return tok.kind == kind and (value is None or tok.value == value)

    def at_keyword(self, word: str) -> bool:
        return self.at("IDENT", word)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        if self.at(kind, value):
            return self.advance()
        expected = value if value is not None else kind
        tok = self.current
        raise ParseError(
            f"expected {expected!r}, found {tok.value or tok.kind!r}",
            tok.span,
            expected=(expected,),
        )

    def expect_keyword(self, word: str) -> Token:
        return self.expect("IDENT", word)

    def skip_newlines(self) -> None:
        while self.at("NEWLINE"):
            self.advance()

    def end_line(self) -> None:
        if self.at("EOF"):
            return
        self.expect("NEWLINE")


# ---------------------------------------------------------------------------
# model parsing


def parse_model(text: str) -> Model:
    """Parse DSL source into a Model; raises ParseError on malformed input."""
    ts = _Stream(tokenize(text))
    ts.skip_newlines()
    ts.expect_keyword("model")
    name = _ident(ts, "model name")
    ts.end_line()

    in_events: list[str] = []
    internal_events: list[str] = []
    variables: list[VarDecl] = []
    exe_orders: Optional[list[int]] = None
    patterns: set[str] = set()
    charts: list[Statechart] = []

    ts.skip_newlines()
    while not ts.at("EOF"):
        tok = ts.current
        if ts.at_keyword("in"):
            ts.advance()
            ts.expect_keyword("event")
            in_events.append(_ident(ts, "event name"))
            ts.end_line()
        elif ts.at_keyword("event"):
            ts.advance()
            internal_events.append(_ident(ts, "event name"))
            ts.end_line()
        elif ts.at_keyword("var"):
            variables.append(_parse_var(ts))
        elif ts.at_keyword("order"):
            ts.advance()
            exe_orders = [_int(ts)]
            while ts.accept(","):
                exe_orders.append(_int(ts))
            ts.end_line()
        elif ts.at_keyword("pattern"):
            ts.advance()
            tag = ts.expect("IDENT")
            if tag.value not in ("twc", "ceo"):
                raise ParseError(f"unknown pattern tag {tag.value!r}", tag.span, ("twc", "ceo"))
            patterns.add(tag.value)
            ts.end_line()
        elif ts.at_keyword("chart"):
            charts.append(_parse_chart(ts))
        else:
            raise ParseError(
                f"expected a declaration, found {tok.value!r}",
                tok.span,
                expected=("in", "event", "var", "order", "pattern", "chart"),
            )
        ts.skip_newlines()

    interface = InterfaceDecl(
        in_events=tuple(in_events),
        internal_events=tuple(internal_events),
        variables=tuple(variables),
        exe_orders=tuple(exe_orders) if exe_orders is not None else None,
    )
    return Model(name=name, interface=interface, charts=tuple(charts), patterns=frozenset(patterns))


def _ident(ts: _Stream, what: str) -> str:
    tok = ts.current
    if tok.kind != "IDENT":
        raise ParseError(f"expected {what}, found {tok.value or tok.kind!r}", tok.span, ("IDENT",))
    if tok.value in KEYWORDS:
        raise ParseError(f"keyword {tok.value!r} cannot be used as {what}", tok.span, ("IDENT",))
    ts.advance()
    return tok.value


def _int(ts: _Stream) -> int:
    neg = ts.accept("-") is not None
    tok = ts.expect("INT")
    return -int(tok.value) if neg else int(tok.value)


def _parse_var(ts: _Stream) -> VarDecl:
    span = ts.current.span
    ts.expect_keyword("var")
    name = _ident(ts, "variable name")
    ts.expect(":")
    ts.expect_keyword("int")
    ts.expect("[")
    lo = _int(ts)
    ts.expect("..")
    hi = _int(ts)
    ts.expect("]")
    ts.expect("=")
    init = _int(ts)
    ts.end_line()
    return VarDecl(name, lo, hi, init, span=span)


def _parse_chart(ts: _Stream) -> Statechart:
    span = ts.current.span
    ts.expect_keyword("chart")
    name = _ident(ts, "chart name")
    ts.expect_keyword("priority")
    cid = _int(ts)
    manager = ts.accept("IDENT", "manager") is not None
    ts.end_line()
    ts.skip_newlines()

    states: list[str] = []
    initial: Optional[str] = None
    transitions: list[Transition] = []
    while True:
        if ts.at_keyword("initial"):
            tok = ts.advance()
            if initial is not None:
                raise ParseError(f"chart {name} declares initial twice", tok.span)
            initial = _ident(ts, "state name")
            ts.end_line()
        elif ts.at_keyword("state"):
            ts.advance()
            states.append(_ident(ts, "state name"))
            ts.end_line()
        elif ts.at_keyword("transition"):
            transitions.append(_parse_transition(ts))
        else:
            break
        ts.skip_newlines()
    if initial is None:
        raise ParseError(f"chart {name} has no initial state", span)
    return Statechart(
        id=cid,
        name=name,
        states=tuple(states),
        initial=initial,
        transitions=tuple(transitions),
        manager=manager,
        span=span,
    )


def _parse_transition(ts: _Stream) -> Transition:
    span = ts.current.span
    ts.expect_keyword("transition")
    source = _ident(ts, "source state")
    ts.expect("->")
    target = _ident(ts, "target state")
    trigger = None
    if ts.at_keyword("on"):
        ts.advance()
        trigger = EventTrigger(_ident(ts, "event name"))
    elif ts.at_keyword("after"):
        ts.advance()
        tok = ts.expect("TIME")
        trigger = TimeTrigger(int(tok.value[:-1]))
    guard = None
    if ts.at_keyword("if"):
        ts.advance()
        guard = _parse_expr(ts)
    actions: list[Action] = []
    if ts.at_keyword("do"):
        ts.advance()
        actions.append(_parse_action(ts))
        while ts.accept(";"):
            actions.append(_parse_action(ts))
    ts.end_line()
    return Transition(source, target, trigger, guard, tuple(actions), span=span)


def _parse_action(ts: _Stream) -> Action:
    span = ts.current.span
    if ts.at_keyword("raise"):
        ts.advance()
        return RaiseEvent(_ident(ts, "event name"), span=span)
    name = _ident(ts, "action target")
    if ts.at("."):
        return _parse_native(ts, name, span)
    ts.expect("=")
    expr = _parse_expr(ts)
    return Assign(name, expr, span=span)


def _parse_native(ts: _Stream, prefix: str, span: SourceSpan) -> NativeCall:
    ts.expect(".")
    member = _ident(ts, "native function name")
    ts.expect("(")
    args: list[Expr] = []
    if not ts.at(")"):
        args.append(_parse_expr(ts))
        while ts.accept(","):
            args.append(_parse_expr(ts))
    ts.expect(")")
    return NativeCall(f"{prefix}.{member}", tuple(args), span=span)


# Precedence-climbing expression parser: || < && < ! < comparison < + -.
def _parse_expr(ts: _Stream) -> Expr:
    return _parse_or(ts)


def _parse_or(ts: _Stream) -> Expr:
    left = _parse_and(ts)
    while ts.at("||"):
        span = ts.advance().span
        left = BoolOp("||", left, _parse_and(ts), span=span)
    return left


def _parse_and(ts: _Stream) -> Expr:
    left = _parse_unary(ts)
    while ts.at("&&"):
        span = ts.advance().span
        left = BoolOp("&&", left, _parse_unary(ts), span=span)
    return left


_CMP_OPS = ("<", "<=", "==", "!=", ">=", ">")


def _parse_unary(ts: _Stream) -> Expr:
    if ts.at("!"):
        span = ts.advance().span
        return Not(_parse_unary(ts), span=span)
    left = _parse_sum(ts)
    for op in _CMP_OPS:
        if ts.at(op):
            span = ts.advance().span
            return Compare(op, left, _parse_sum(ts), span=span)
    return left


def _parse_sum(ts: _Stream) -> Expr:
    left = _parse_primary(ts)
    while ts.at("+") or ts.at("-"):
        op = ts.advance()
        left = Arith(op.value, left, _parse_primary(ts), span=op.span)
    return left


def _parse_primary(ts: _Stream) -> Expr:
    tok = ts.current
    if ts.accept("("):
        inner = _parse_expr(ts)
        ts.expect(")")
        return inner
    if tok.kind == "INT":
        ts.advance()
        return IntLit(int(tok.value), span=tok.span)
    if ts.at("-"):
        ts.advance()
        lit = ts.expect("INT")
        return IntLit(-int(lit.value), span=tok.span)
    if ts.at_keyword("true"):
        ts.advance()
        return BoolLit(True, span=tok.span)
    if ts.at_keyword("false"):
        ts.advance()
        return BoolLit(False, span=tok.span)
    if tok.kind == "IDENT" and tok.value not in KEYWORDS:
        name = tok.value
        ts.advance()
        if ts.at("."):
            return _parse_native(ts, name, tok.span)
        return VarRef(name, span=tok.span)
    raise ParseError(
        f"expected an expression, found {tok.value or tok.kind!r}",
        tok.span,
        expected=("(", "INT", "IDENT", "!", "true", "false"),
    )


# ---------------------------------------------------------------------------
# serialization

_LEVEL_OR, _LEVEL_AND, _LEVEL_NOT, _LEVEL_CMP, _LEVEL_ADD, _LEVEL_ATOM = range(1, 7)


def _expr_level(expr: Expr) -> int:
    if isinstance(expr, BoolOp):
        return _LEVEL_OR if expr.op == "||" else _LEVEL_AND
    if isinstance(expr, Not):
        return _LEVEL_NOT
    if isinstance(expr, Compare):
        return _LEVEL_CMP
    if isinstance(expr, Arith):
        return _LEVEL_ADD
    return _LEVEL_ATOM


def format_expr(expr: Expr, parent_level: int = 0) -> str:
    level = _expr_level(expr)
    if isinstance(expr, IntLit):
        text = str(expr.value)
    elif isinstance(expr, BoolLit):
        text = "true" if expr.value else "false"
    elif isinstance(expr, VarRef):
        text = expr.name
    elif isinstance(expr, StateAtom):
        text = f"{expr.chart}.{expr.state}"
    elif isinstance(expr, NativeCall):
        text = f"{expr.name}({', '.join(format_expr(a) for a in expr.args)})"
    elif isinstance(expr, Not):
        text = f"!{format_expr(expr.operand, _LEVEL_NOT)}"
    elif isinstance(expr, (Arith, Compare, BoolOp)):
        # Right operand at level+1 keeps chains canonically left-associated.
        text = f"{format_expr(expr.left, level)} {expr.op} {format_expr(expr.right, level + 1)}"
    else:
        raise AssertionError(f"unknown expression node {expr!r}")
    if level < parent_level:
        return f"({text})"
    return text


def _format_action(act: Action) -> str:
    if isinstance(act, RaiseEvent):
        return f"raise {act.event}"
    if isinstance(act, Assign):
        return f"{act.var} = {format_expr(act.expr)}"
    if isinstance(act, NativeCall):
        return format_expr(act)
    raise AssertionError(f"unknown action {act!r}")


def serialize_model(m: Model) -> str:
    """Render a Model as canonical DSL text (parse_model inverts it)."""
    lines = [f"model {m.name}"]
    for tag in ("twc", "ceo"):
        if tag in m.patterns:
            lines.append(f"pattern {tag}")
    for ev in m.interface.in_events:
        lines.append(f"in event {ev}")
    for ev in m.interface.internal_events:
        lines.append(f"event {ev}")
    for v in m.interface.variables:
        lines.append(f"var {v.name}: int[{v.lo}..{v.hi}] = {v.init}")
    if m.interface.exe_orders is not None:
        lines.append("order " + ", ".join(str(i) for i in m.interface.exe_orders))
    for chart in m.charts:
        lines.append("")
        head = f"chart {chart.name} priority {chart.id}"
        if chart.manager:
            head += " manager"
        lines.append(head)
        lines.append(f"  initial {chart.initial}")
        for s in chart.states:
            lines.append(f"  state {s}")
        for tr in chart.transitions:
            parts = [f"  transition {tr.source} -> {tr.target}"]
            if isinstance(tr.trigger, EventTrigger):
                parts.append(f"on {tr.trigger.event}")
            elif isinstance(tr.trigger, TimeTrigger):
                parts.append(f"after {tr.trigger.seconds}s")
            if tr.guard is not None:
                parts.append(f"if {format_expr(tr.guard)}")
            if tr.actions:
                parts.append("do " + "; ".join(_format_action(a) for a in tr.actions))
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# queries


def parse_query(text: str) -> Query:
    """Parse a TCTL-lite formula: `E<> pred` or `A[] pred`.

    `p imply q` is sugar for `(!p) || q` and parses to the identical tree.
    """
    ts = _Stream(tokenize(text))
    ts.skip_newlines()
    tok = ts.current
    if ts.accept("IDENT", "E"):
        ts.expect("<")
        ts.expect(">")
        mode = QueryMode.EXISTS_EVENTUALLY
    elif ts.accept("IDENT", "A"):
        ts.expect("[")
        ts.expect("]")
        mode = QueryMode.ALWAYS_GLOBALLY
    else:
        raise ParseError(
            f"expected 'E<>' or 'A[]', found {tok.value or tok.kind!r}",
            tok.span,
            expected=("E<>", "A[]"),
        )
    pred = _parse_imply(ts)
    ts.skip_newlines()
    if not ts.at("EOF"):
        raise ParseError(f"trailing input after formula: {ts.current.value!r}", ts.current.span)
    return Query(mode, pred, text=text.strip())


def _parse_imply(ts: _Stream) -> Expr:
    left = _parse_qor(ts)
    if ts.at_keyword("imply"):
        ts.advance()
        right = _parse_imply(ts)
        return BoolOp("||", Not(left), right)
    return left


def _parse_qor(ts: _Stream) -> Expr:
    left = _parse_qand(ts)
    while ts.at("||"):
        ts.advance()
        left = BoolOp("||", left, _parse_qand(ts))
    return left


def _parse_qand(ts: _Stream) -> Expr:
    left = _parse_qunary(ts)
    while ts.at("&&"):
        ts.advance()
        left = BoolOp("&&", left, _parse_qunary(ts))
    return left


def _parse_qunary(ts: _Stream) -> Expr:
    if ts.at("!"):
        span = ts.advance().span
        return Not(_parse_qunary(ts), span=span)
    if ts.accept("("):
        inner = _parse_imply(ts)
        ts.expect(")")
        return inner
    return _parse_qatom(ts)


def _parse_qatom(ts: _Stream) -> Expr:
    tok = ts.current
    if ts.at_keyword("true"):
        ts.advance()
        return BoolLit(True, span=tok.span)
    if ts.at_keyword("false"):
        ts.advance()
        return BoolLit(False, span=tok.span)
    left: Expr
    if tok.kind == "INT" or ts.at("-"):
        left = _parse_qoperand(ts)
    elif tok.kind == "IDENT" and tok.value != "imply":
        name = tok.value
        ts.advance()
        if ts.accept("."):
            state = ts.expect("IDENT")
            return StateAtom(name, state.value, span=tok.span)
        left = VarRef(name, span=tok.span)
    else:
        raise ParseError(
            f"expected an atom, found {tok.value or tok.kind!r}",
            tok.span,
            expected=("IDENT", "INT", "(", "!"),
        )
    for op in _CMP_OPS:
        if ts.at(op):
            ts.advance()
            return Compare(op, left, _parse_qoperand(ts))
    tok = ts.current
    raise ParseError(
        f"expected a comparison operator, found {tok.value or tok.kind!r}",
        tok.span,
        expected=_CMP_OPS,
    )


def _parse_qoperand(ts: _Stream) -> Expr:
    tok = ts.current
    if tok.kind == "INT":
        ts.advance()
        return IntLit(int(tok.value), span=tok.span)
    if ts.at("-"):
        ts.advance()
        lit = ts.expect("INT")
        return IntLit(-int(lit.value), span=tok.span)
    if tok.kind == "IDENT" and tok.value != "imply":
        ts.advance()
        return VarRef(tok.value, span=tok.span)
    raise ParseError(
        f"expected a variable or integer, found {tok.value or tok.kind!r}",
        tok.span,
        expected=("IDENT", "INT"),
    )


def parse_query_file(text: str) -> list[Query]:
    """Parse a `.q` file: one formula per line, `#` comments and blanks skipped."""
    queries = []
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            queries.append(parse_query(stripped))
    return queries
