"""Recursive-descent parser for the engine's SQL subset.

Covers: SELECT lists with aliases, FROM with tables / subqueries / windowing
TVF calls using named arguments, WHERE with AND-connected comparisons and
timestamp +/- interval arithmetic, GROUP BY column refs, and a trailing EMIT
clause. EMIT is only legal on the top-level query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SqlError
from .lexer import Tok, Token, tokenize
from .times import Duration

AGG_FUNCS = ("MAX", "MIN", "SUM", "COUNT")
_KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "AS", "AND", "EMIT", "STREAM",
    "AFTER", "WATERMARK", "DELAY", "TABLE", "DESCRIPTOR", "INTERVAL",
    "MINUTE", "MINUTES",
} | set(AGG_FUNCS)


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    table: str | None
    name: str


@dataclass(frozen=True)
class IntegerLit:
    value: int


@dataclass(frozen=True)
class IntervalLit:
    value: Duration


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: object
    right: object


STAR = "*"


@dataclass(frozen=True)
class AggCall:
    func: str
    arg: object  # ColumnRef | expression | STAR (COUNT only)


@dataclass(frozen=True)
class SelectItem:
    expr: object
    alias: str | None = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None


@dataclass(frozen=True)
class SubqueryRef:
    query: Select
    alias: str | None = None


@dataclass(frozen=True)
class TableArg:
    name: str


@dataclass(frozen=True)
class DescriptorArg:
    column: str


@dataclass(frozen=True)
class TvfCall:
    name: str
    args: tuple[tuple[str, object], ...]  # (lowercased arg name, value) in call order
    alias: str | None = None


@dataclass(frozen=True)
class EmitSpec:
    stream: bool = False
    after_watermark: bool = False
    delay: Duration | None = None


@dataclass(frozen=True)
class Select:
    items: tuple[SelectItem, ...] | str  # STAR for `SELECT *`
    from_items: tuple[object, ...]
    where: object | None = None
    group_by: tuple[ColumnRef, ...] = ()
    emit: EmitSpec | None = field(default=None)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected: str) -> SqlError:
        tok = self.peek()
        got = "end of input" if tok.kind is Tok.EOF else repr(tok.text)
        return SqlError(f"expected {expected}, got {got}", tok.line, tok.col)

    def accept_punct(self, p: str) -> bool:
        if self.peek().is_punct(p):
            self.next()
            return True
        return False

    def expect_punct(self, p: str) -> Token:
        if not self.peek().is_punct(p):
            raise self.error(repr(p))
        return self.next()

    def accept_word(self, *words: str) -> Token | None:
        if self.peek().is_word(*words):
            return self.next()
        return None

    def expect_word(self, *words: str) -> Token:
        tok = self.accept_word(*words)
        if tok is None:
            raise self.error(" or ".join(words))
        return tok

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind is not Tok.WORD or tok.text.upper() in _KEYWORDS:
            raise self.error(what)
        return self.next().text

    # -- statements ---------------------------------------------------------

    def parse_statement(self) -> Select:
        query = self.parse_select(top_level=True)
        self.expect_punct(";")
        if self.peek().kind is not Tok.EOF:
            raise self.error("end of statement")
        return query

    def parse_select(self, top_level: bool) -> Select:
        self.expect_word("SELECT")
        items = self.parse_select_list()
        self.expect_word("FROM")
        from_items = [self.parse_from_item()]
        while self.accept_punct(","):
            from_items.append(self.parse_from_item())
        where = None
        if self.accept_word("WHERE"):
            where = self.parse_expr()
        group_by: list[ColumnRef] = []
        if self.accept_word("GROUP"):
            self.expect_word("BY")
            group_by.append(self.parse_column_ref())
            while self.accept_punct(","):
                group_by.append(self.parse_column_ref())
        emit = None
        if self.peek().is_word("EMIT"):
            emit_tok = self.next()
            if not top_level:
                raise SqlError("nested EMIT unsupported", emit_tok.line, emit_tok.col)
            emit = self.parse_emit()
        return Select(
            items=items,
            from_items=tuple(from_items),
            where=where,
            group_by=tuple(group_by),
            emit=emit,
        )

    def parse_select_list(self):
        if self.accept_punct("*"):
            return STAR
        items = [self.parse_select_item()]
        while self.accept_punct(","):
            items.append(self.parse_select_item())
        return tuple(items)

    def parse_select_item(self) -> SelectItem:
        expr = self.parse_expr()
        alias = None
        if self.accept_word("AS"):
            alias = self.expect_ident("alias")
        elif self.peek().kind is Tok.WORD and self.peek().text.upper() not in _KEYWORDS:
            alias = self.next().text
        return SelectItem(expr, alias)

    # -- FROM items ---------------------------------------------------------

    def parse_from_item(self):
        tok = self.peek()
        if tok.is_punct("("):
            self.next()
            query = self.parse_select(top_level=False)
            self.expect_punct(")")
            return SubqueryRef(query, self.parse_opt_alias())
        if tok.kind is not Tok.WORD or tok.text.upper() in _KEYWORDS:
            raise self.error("table name, subquery, or table function")
        name = self.next().text
        if self.peek().is_punct("("):
            return self.parse_tvf_call(name)
        return TableRef(name, self.parse_opt_alias())

    def parse_opt_alias(self) -> str | None:
        if self.accept_word("AS"):
            return self.expect_ident("alias")
        tok = self.peek()
        if tok.kind is Tok.WORD and tok.text.upper() not in _KEYWORDS:
            return self.next().text
        return None

    def parse_tvf_call(self, name: str) -> TvfCall:
        self.expect_punct("(")
        args: list[tuple[str, object]] = []
        while True:
            arg_name = self.expect_ident("argument name")
            self.expect_punct("=>")
            args.append((arg_name.lower(), self.parse_tvf_arg()))
            # A separating comma is optional so published query texts with the
            # comma elided between named arguments still parse.
            self.accept_punct(",")
            if self.accept_punct(")"):
                break
        return TvfCall(name, tuple(args), self.parse_opt_alias())

    def parse_tvf_arg(self):
        if self.accept_word("TABLE"):
            # Both TABLE(name) and TABLE name are accepted.
            if self.accept_punct("("):
                name = self.expect_ident("table name")
                self.expect_punct(")")
            else:
                name = self.expect_ident("table name")
            return TableArg(name)
        if self.accept_word("DESCRIPTOR"):
            self.expect_punct("(")
            column = self.expect_ident("column name")
            self.expect_punct(")")
            return DescriptorArg(column)
        tok = self.peek()
        if tok.kind is Tok.INTERVAL:
            self.next()
            return IntervalLit(tok.value)
        return self.parse_expr()

    # -- EMIT ---------------------------------------------------------------

    def parse_emit(self) -> EmitSpec:
        stream = self.accept_word("STREAM") is not None
        after_watermark = False
        delay: Duration | None = None
        first = True
        while True:
            if first:
                tok = self.accept_word("AFTER")
                if tok is None:
                    break
            else:
                if not self.accept_word("AND"):
                    break
                self.expect_word("AFTER")
            first = False
            which = self.expect_word("WATERMARK", "DELAY")
            if which.text.upper() == "WATERMARK":
                if after_watermark:
                    raise SqlError("duplicate AFTER WATERMARK", which.line, which.col)
                after_watermark = True
            else:
                if delay is not None:
                    raise SqlError("duplicate AFTER DELAY", which.line, which.col)
                tok = self.peek()
                if tok.kind is not Tok.INTERVAL:
                    raise self.error("interval literal")
                self.next()
                delay = tok.value
        if not stream and not after_watermark and delay is None:
            raise self.error("STREAM, AFTER WATERMARK, or AFTER DELAY")
        return EmitSpec(stream=stream, after_watermark=after_watermark, delay=delay)

    # -- expressions --------------------------------------------------------

    def parse_expr(self):
        return self.parse_and()

    def parse_and(self):
        left = self.parse_comparison()
        while self.accept_word("AND"):
            left = BinaryOp("AND", left, self.parse_comparison())
        return left

    def parse_comparison(self):
        left = self.parse_additive()
        tok = self.peek()
        if tok.kind is Tok.PUNCT and tok.text in ("=", "<", "<=", ">", ">="):
            self.next()
            return BinaryOp(tok.text, left, self.parse_additive())
        return left

    def parse_additive(self):
        left = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.kind is Tok.PUNCT and tok.text in ("+", "-"):
                self.next()
                left = BinaryOp(tok.text, left, self.parse_primary())
            else:
                return left

    def parse_primary(self):
        tok = self.peek()
        if tok.kind is Tok.INT:
            self.next()
            return IntegerLit(tok.value)
        if tok.kind is Tok.INTERVAL:
            self.next()
            return IntervalLit(tok.value)
        if tok.is_punct("("):
            self.next()
            expr = self.parse_expr()
            self.expect_punct(")")
            return expr
        if tok.is_word(*AGG_FUNCS):
            func = self.next().text.upper()
            self.expect_punct("(")
            if func == "COUNT" and self.accept_punct("*"):
                arg = STAR
            else:
                arg = self.parse_expr()
            self.expect_punct(")")
            return AggCall(func, arg)
        if tok.kind is Tok.WORD and tok.text.upper() not in _KEYWORDS:
            return self.parse_column_ref()
        raise self.error("expression")

    def parse_column_ref(self) -> ColumnRef:
        first = self.expect_ident("column reference")
        if self.accept_punct("."):
            return ColumnRef(first, self.expect_ident("column name"))
        return ColumnRef(None, first)


def parse_query(tokens: list[Token]) -> Select:
    """Parse a token stream (one statement, `;`-terminated) into an AST."""
    return _Parser(tokens).parse_statement()


def parse_sql(text: str) -> Select:
    return parse_query(tokenize(text))


# ---------------------------------------------------------------------------
# Canonical printer (round-trip support)
# ---------------------------------------------------------------------------


def to_sql(node) -> str:
    """Print an AST back to parseable SQL text (single line, canonical form)."""
    if isinstance(node, Select):
        parts = ["SELECT"]
        if node.items == STAR:
            parts.append("*")
        else:
            parts.append(", ".join(_item_sql(i) for i in node.items))
        parts.append("FROM")
        parts.append(", ".join(_from_sql(f) for f in node.from_items))
        if node.where is not None:
            parts.append("WHERE")
            parts.append(_expr_sql(node.where))
        if node.group_by:
            parts.append("GROUP BY")
            parts.append(", ".join(_expr_sql(g) for g in node.group_by))
        if node.emit is not None:
            parts.append(_emit_sql(node.emit))
        return " ".join(parts)
    raise TypeError(f"not a query node: {node!r}")


def statement_sql(node: Select) -> str:
    return to_sql(node) + ";"


def _item_sql(item: SelectItem) -> str:
    text = _expr_sql(item.expr)
    return f"{text} AS {item.alias}" if item.alias else text


def _from_sql(node) -> str:
    if isinstance(node, TableRef):
        return f"{node.name} {node.alias}" if node.alias else node.name
    if isinstance(node, SubqueryRef):
        inner = f"({to_sql(node.query)})"
        return f"{inner} {node.alias}" if node.alias else inner
    if isinstance(node, TvfCall):
        args = ", ".join(f"{name} => {_arg_sql(value)}" for name, value in node.args)
        call = f"{node.name}({args})"
        return f"{call} {node.alias}" if node.alias else call
    raise TypeError(f"not a FROM item: {node!r}")


def _arg_sql(node) -> str:
    if isinstance(node, TableArg):
        return f"TABLE({node.name})"
    if isinstance(node, DescriptorArg):
        return f"DESCRIPTOR({node.column})"
    return _expr_sql(node)


def _emit_sql(emit: EmitSpec) -> str:
    parts = ["EMIT"]
    if emit.stream:
        parts.append("STREAM")
    clauses = []
    if emit.after_watermark:
        clauses.append("AFTER WATERMARK")
    if emit.delay is not None:
        clauses.append(f"AFTER DELAY INTERVAL '{emit.delay.minutes}' MINUTE")
    parts.append(" AND ".join(clauses))
    return " ".join(p for p in parts if p)


def _expr_sql(node) -> str:
    if isinstance(node, ColumnRef):
        return f"{node.table}.{node.name}" if node.table else node.name
    if isinstance(node, IntegerLit):
        return str(node.value)
    if isinstance(node, IntervalLit):
        return f"INTERVAL '{node.value.minutes}' MINUTE"
    if isinstance(node, AggCall):
        arg = "*" if node.arg == STAR else _expr_sql(node.arg)
        return f"{node.func}({arg})"
    if isinstance(node, BinaryOp):
        left, right = _expr_sql(node.left), _expr_sql(node.right)
        if node.op == "AND":
            return f"{left} AND {right}"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression: {node!r}")
