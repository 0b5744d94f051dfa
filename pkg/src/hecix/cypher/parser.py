"""Recursive-descent parser and schema validator for the Cypher subset.

Grammar (authoritative):

    query   := MATCH pattern ("," pattern)*
               (WHERE bexpr)?
               RETURN (DISTINCT)? item ("," item)*
               (ORDER BY ordexpr ("," ordexpr)*)? (SKIP int)? (LIMIT int)?
    pattern := node (rel node)*
    node    := "(" var? (":" label)? props? ")"
    rel     := ("<-" | "-") "[" var? (":" reltype)? "]" ("->" | "-")
    props   := "{" key ":" literal ("," key ":" literal)* "}"
    item    := expr (AS ident)?
    expr    := var | var "." key | COUNT "(" (expr | "*") ")"
             | COLLECT "(" expr ")" | TOLOWER "(" expr ")" | literal

Aggregates (count/collect) are only legal as the whole expression of a
RETURN or ORDER BY item; relationship variables may not repeat.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError, UnboundVariable
from ..schema import GraphSchema
from .ast import (
    And,
    BooleanExpr,
    Comparison,
    Expr,
    FunctionCall,
    LEFT,
    Literal,
    NodePattern,
    Not,
    Or,
    OrderItem,
    PathPattern,
    PropertyAccess,
    QueryAst,
    RelPattern,
    ReturnItem,
    RIGHT,
    Scalar,
    UNDIRECTED,
    Variable,
    bool_variables,
    expr_variables,
)
from .lexer import Token, tokenize

_COMPARE_OPS = {"=", "<>", "<", "<=", ">", ">="}
_FUNC_NAMES = {"COUNT": "count", "COLLECT": "collect", "TOLOWER": "tolower"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        return ParseError(expected, tok.describe(), tok.pos)

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.value == value

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.value == word

    def eat_punct(self, value: str) -> Token:
        if not self.at_punct(value):
            raise self.fail(f"'{value}'")
        return self.next()

    def eat_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.fail(word)
        return self.next()

    def eat_ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.fail(what)
        self.next()
        return str(tok.value)

    # -- query ---------------------------------------------------------------

    def parse_query(self) -> QueryAst:
        self.eat_keyword("MATCH")
        patterns = [self.parse_pattern()]
        while self.at_punct(","):
            self.next()
            patterns.append(self.parse_pattern())

        where = None
        if self.at_keyword("WHERE"):
            self.next()
            where = self.parse_bool()

        self.eat_keyword("RETURN")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.next()
            distinct = True
        items = [self.parse_return_item()]
        while self.at_punct(","):
            self.next()
            items.append(self.parse_return_item())

        order_by: list[OrderItem] = []
        if self.at_keyword("ORDER"):
            self.next()
            self.eat_keyword("BY")
            order_by.append(self.parse_order_item())
            while self.at_punct(","):
                self.next()
                order_by.append(self.parse_order_item())

        skip = None
        if self.at_keyword("SKIP"):
            self.next()
            skip = self.parse_count("SKIP")
        limit = None
        if self.at_keyword("LIMIT"):
            self.next()
            limit = self.parse_count("LIMIT")

        if self.peek().kind != "EOF":
            raise self.fail("end of query")

        ast = QueryAst(
            patterns=patterns,
            where=where,
            return_items=items,
            distinct=distinct,
            order_by=order_by,
            skip=skip,
            limit=limit,
        )
        _check_scopes(ast)
        return ast

    def parse_count(self, what: str) -> int:
        tok = self.peek()
        if tok.kind != "INT":
            raise self.fail(f"non-negative integer after {what}")
        self.next()
        return int(tok.value)

    # -- patterns --------------------------------------------------------------

    def parse_pattern(self) -> PathPattern:
        elements: list = [self.parse_node()]
        while self.at_punct("-") or self.at_punct("<-"):
            elements.append(self.parse_rel())
            elements.append(self.parse_node())
        return PathPattern(elements=elements)

    def parse_node(self) -> NodePattern:
        self.eat_punct("(")
        variable = None
        if self.peek().kind == "IDENT":
            variable = self.eat_ident("variable")
        label = None
        if self.at_punct(":"):
            self.next()
            label = self.eat_ident("label")
        properties: dict[str, Scalar] = {}
        if self.at_punct("{"):
            properties = self.parse_props()
        self.eat_punct(")")
        return NodePattern(variable=variable, label=label, properties=properties)

    def parse_rel(self) -> RelPattern:
        left_arrow = False
        if self.at_punct("<-"):
            self.next()
            left_arrow = True
        else:
            self.eat_punct("-")
        self.eat_punct("[")
        variable = None
        if self.peek().kind == "IDENT":
            variable = self.eat_ident("relationship variable")
        rel_type = None
        if self.at_punct(":"):
            self.next()
            rel_type = self.eat_ident("relationship type")
        self.eat_punct("]")
        right_arrow = False
        if self.at_punct("->"):
            self.next()
            right_arrow = True
        else:
            self.eat_punct("-")
        if left_arrow and right_arrow:
            raise self.fail("at most one arrowhead")
        direction = LEFT if left_arrow else RIGHT if right_arrow else UNDIRECTED
        return RelPattern(variable=variable, rel_type=rel_type, direction=direction)

    def parse_props(self) -> dict[str, Scalar]:
        self.eat_punct("{")
        props: dict[str, Scalar] = {}
        while True:
            key = self.eat_ident("property key")
            self.eat_punct(":")
            props[key] = self.parse_literal()
            if self.at_punct(","):
                self.next()
                continue
            break
        self.eat_punct("}")
        return props

    def parse_literal(self) -> Scalar:
        tok = self.peek()
        if tok.kind == "STRING":
            self.next()
            return str(tok.value)
        negative = False
        if self.at_punct("-"):
            self.next()
            negative = True
            tok = self.peek()
        if tok.kind in ("INT", "FLOAT"):
            self.next()
            return -tok.value if negative else tok.value  # type: ignore[operand-type]
        if negative:
            raise self.fail("number after '-'")
        if tok.kind == "KEYWORD" and tok.value in ("TRUE", "FALSE"):
            self.next()
            return tok.value == "TRUE"
        raise self.fail("literal")

    # -- expressions -------------------------------------------------------------

    def parse_expr(self, allow_aggregate: bool) -> Expr:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in _FUNC_NAMES:
            name = _FUNC_NAMES[str(tok.value)]
            if name in ("count", "collect") and not allow_aggregate:
                raise self.fail("non-aggregate expression")
            self.next()
            self.eat_punct("(")
            arg: Expr | None
            if name == "count" and self.at_punct("*"):
                self.next()
                arg = None
            else:
                arg = self.parse_expr(allow_aggregate=False)
            self.eat_punct(")")
            return FunctionCall(name=name, arg=arg)
        if tok.kind == "IDENT":
            name = self.eat_ident("variable")
            if self.at_punct("."):
                self.next()
                key = self.eat_ident("property key")
                return PropertyAccess(variable=name, key=key)
            return Variable(name=name)
        return Literal(value=self.parse_literal())

    def parse_return_item(self) -> ReturnItem:
        expr = self.parse_expr(allow_aggregate=True)
        alias = None
        if self.at_keyword("AS"):
            self.next()
            alias = self.eat_ident("alias")
        return ReturnItem(expr=expr, alias=alias)

    def parse_order_item(self) -> OrderItem:
        expr = self.parse_expr(allow_aggregate=True)
        ascending = True
        if self.at_keyword("ASC"):
            self.next()
        elif self.at_keyword("DESC"):
            self.next()
            ascending = False
        return OrderItem(expr=expr, ascending=ascending)

    # -- boolean expressions ----------------------------------------------------

    def parse_bool(self) -> BooleanExpr:
        left = self.parse_and()
        while self.at_keyword("OR"):
            self.next()
            left = Or(left=left, right=self.parse_and())
        return left

    def parse_and(self) -> BooleanExpr:
        left = self.parse_not()
        while self.at_keyword("AND"):
            self.next()
            left = And(left=left, right=self.parse_not())
        return left

    def parse_not(self) -> BooleanExpr:
        if self.at_keyword("NOT"):
            self.next()
            return Not(operand=self.parse_not())
        if self.at_punct("("):
            self.next()
            inner = self.parse_bool()
            self.eat_punct(")")
            return inner
        return self.parse_comparison()

    def parse_comparison(self) -> Comparison:
        left = self.parse_expr(allow_aggregate=False)
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value in _COMPARE_OPS:
            self.next()
            op = str(tok.value)
        elif self.at_keyword("CONTAINS"):
            self.next()
            op = "CONTAINS"
        elif self.at_keyword("STARTS"):
            self.next()
            self.eat_keyword("WITH")
            op = "STARTS_WITH"
        elif self.at_keyword("ENDS"):
            self.next()
            self.eat_keyword("WITH")
            op = "ENDS_WITH"
        else:
            raise self.fail("comparison operator")
        right = self.parse_expr(allow_aggregate=False)
        return Comparison(op=op, left=left, right=right)


def _check_scopes(ast: QueryAst) -> None:
    bound = ast.bound_variables()
    seen_rel_vars: set[str] = set()
    for pattern in ast.patterns:
        for rel in pattern.rel_patterns():
            if rel.variable:
                if rel.variable in seen_rel_vars:
                    raise ParseError(
                        "a fresh relationship variable",
                        f"reused variable {rel.variable!r}",
                        0,
                    )
                seen_rel_vars.add(rel.variable)
        for node in pattern.node_patterns():
            if node.variable and node.variable in seen_rel_vars:
                raise ParseError(
                    "distinct node and relationship variables",
                    f"variable {node.variable!r} used for both",
                    0,
                )
    used: set[str] = set()
    if ast.where is not None:
        used |= bool_variables(ast.where)
    for item in ast.return_items:
        used |= expr_variables(item.expr)
    aliases = {item.alias for item in ast.return_items if item.alias}
    for order in ast.order_by:
        for name in expr_variables(order.expr):
            if name not in aliases:
                used.add(name)
    for name in sorted(used):
        if name not in bound:
            raise UnboundVariable(name)


def parse(text: str) -> QueryAst:
    """Parse query text into an AST; raises LexError / ParseError / UnboundVariable."""
    return _Parser(tokenize(text)).parse_query()


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class SchemaWarning:
    kind: str  # unknown_label | unknown_rel_type | unknown_property
    subject: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.subject}"


def validate(ast: QueryAst, schema: GraphSchema) -> list[SchemaWarning]:
    """Warn (never error) about names the live schema does not contain."""
    warnings: list[SchemaWarning] = []
    seen: set[SchemaWarning] = set()

    def warn(kind: str, subject: str) -> None:
        warning = SchemaWarning(kind, subject)
        if warning not in seen:
            seen.add(warning)
            warnings.append(warning)

    var_labels: dict[str, str] = {}
    for pattern in ast.patterns:
        for node in pattern.node_patterns():
            if node.variable and node.label and node.variable not in var_labels:
                var_labels[node.variable] = node.label

    all_keys = schema.all_property_keys()

    def check_key(label: str | None, key: str) -> None:
        if label is not None and label in schema.labels:
            if key not in schema.labels[label]:
                warn("unknown_property", f"{label}.{key}")
        elif key not in all_keys:
            warn("unknown_property", key)

    for pattern in ast.patterns:
        for node in pattern.node_patterns():
            if node.label and node.label not in schema.labels:
                warn("unknown_label", node.label)
            for key in node.properties:
                check_key(node.label, key)
        for rel in pattern.rel_patterns():
            if rel.rel_type and rel.rel_type not in schema.rel_types:
                warn("unknown_rel_type", rel.rel_type)

    def check_expr(expr: Expr) -> None:
        if isinstance(expr, PropertyAccess):
            check_key(var_labels.get(expr.variable), expr.key)
        elif isinstance(expr, FunctionCall) and expr.arg is not None:
            check_expr(expr.arg)

    def check_bool(bexpr: BooleanExpr) -> None:
        if isinstance(bexpr, Comparison):
            check_expr(bexpr.left)
            check_expr(bexpr.right)
        elif isinstance(bexpr, (And, Or)):
            check_bool(bexpr.left)
            check_bool(bexpr.right)
        else:
            check_bool(bexpr.operand)

    if ast.where is not None:
        check_bool(ast.where)
    for item in ast.return_items:
        check_expr(item.expr)
    for order in ast.order_by:
        check_expr(order.expr)
    return warnings
