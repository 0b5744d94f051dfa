"""AST for the Cypher subset, plus the canonical text renderer.

`render` is the inverse of `parse`: `parse(render(ast)) == ast` for every
valid AST, and rendering already-canonical text reproduces it exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import KEYWORDS

Scalar = Union[str, int, float, bool]

LEFT = "left"
RIGHT = "right"
UNDIRECTED = "undirected"


# -- expressions -------------------------------------------------------------


@dataclass
class Variable:
    name: str


@dataclass
class PropertyAccess:
    variable: str
    key: str


@dataclass
class Literal:
    value: Scalar


@dataclass
class FunctionCall:
    #: one of "count", "collect", "tolower"; arg None means count(*)
    name: str
    arg: Optional["Expr"]


Expr = Union[Variable, PropertyAccess, Literal, FunctionCall]


# -- boolean expressions ------------------------------------------------------


@dataclass
class Comparison:
    #: one of = <> < <= > >= CONTAINS STARTS_WITH ENDS_WITH
    op: str
    left: Expr
    right: Expr


@dataclass
class And:
    left: "BooleanExpr"
    right: "BooleanExpr"


@dataclass
class Or:
    left: "BooleanExpr"
    right: "BooleanExpr"


@dataclass
class Not:
    operand: "BooleanExpr"


BooleanExpr = Union[Comparison, And, Or, Not]


# -- patterns -----------------------------------------------------------------


@dataclass
class NodePattern:
    variable: Optional[str] = None
    label: Optional[str] = None
    properties: dict[str, Scalar] = field(default_factory=dict)


@dataclass
class RelPattern:
    variable: Optional[str] = None
    rel_type: Optional[str] = None
    direction: str = UNDIRECTED


@dataclass
class PathPattern:
    #: alternating NodePattern / RelPattern, starts and ends with a node
    elements: list[Union[NodePattern, RelPattern]] = field(default_factory=list)

    def node_patterns(self) -> list[NodePattern]:
        return self.elements[0::2]  # type: ignore[return-value]

    def rel_patterns(self) -> list[RelPattern]:
        return self.elements[1::2]  # type: ignore[return-value]


# -- query --------------------------------------------------------------------


@dataclass
class ReturnItem:
    expr: Expr
    alias: Optional[str] = None


@dataclass
class OrderItem:
    expr: Expr
    ascending: bool = True


@dataclass
class QueryAst:
    patterns: list[PathPattern]
    where: Optional[BooleanExpr] = None
    return_items: list[ReturnItem] = field(default_factory=list)
    distinct: bool = False
    order_by: list[OrderItem] = field(default_factory=list)
    skip: Optional[int] = None
    limit: Optional[int] = None

    def bound_variables(self) -> dict[str, str]:
        """Variable name -> "node" | "rel" for every pattern-bound variable."""
        bound: dict[str, str] = {}
        for pattern in self.patterns:
            for element in pattern.elements:
                if isinstance(element, NodePattern) and element.variable:
                    bound.setdefault(element.variable, "node")
                elif isinstance(element, RelPattern) and element.variable:
                    bound.setdefault(element.variable, "rel")
        return bound


def is_aggregate(expr: Expr) -> bool:
    return isinstance(expr, FunctionCall) and expr.name in ("count", "collect")


def expr_contains_aggregate(expr: Expr) -> bool:
    if is_aggregate(expr):
        return True
    if isinstance(expr, FunctionCall) and expr.arg is not None:
        return expr_contains_aggregate(expr.arg)
    return False


def expr_variables(expr: Expr) -> set[str]:
    if isinstance(expr, Variable):
        return {expr.name}
    if isinstance(expr, PropertyAccess):
        return {expr.variable}
    if isinstance(expr, FunctionCall) and expr.arg is not None:
        return expr_variables(expr.arg)
    return set()


def bool_variables(bexpr: BooleanExpr) -> set[str]:
    if isinstance(bexpr, Comparison):
        return expr_variables(bexpr.left) | expr_variables(bexpr.right)
    if isinstance(bexpr, (And, Or)):
        return bool_variables(bexpr.left) | bool_variables(bexpr.right)
    return bool_variables(bexpr.operand)


# -- rendering ----------------------------------------------------------------

_BARE_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_FUNC_CANONICAL = {"count": "count", "collect": "collect", "tolower": "toLower"}


def render_ident(name: str) -> str:
    if _BARE_IDENT.match(name) and name.upper() not in KEYWORDS:
        return name
    return f"`{name}`"


def render_literal(value: Scalar) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    escaped = escaped.replace("\n", "\\n").replace("\t", "\\t")
    return f"'{escaped}'"


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Variable):
        return render_ident(expr.name)
    if isinstance(expr, PropertyAccess):
        return f"{render_ident(expr.variable)}.{render_ident(expr.key)}"
    if isinstance(expr, Literal):
        return render_literal(expr.value)
    if isinstance(expr, FunctionCall):
        name = _FUNC_CANONICAL[expr.name]
        if expr.arg is None:
            return f"{name}(*)"
        return f"{name}({render_expr(expr.arg)})"
    raise TypeError(f"not an expression: {expr!r}")


_COMPARE_TEXT = {"STARTS_WITH": "STARTS WITH", "ENDS_WITH": "ENDS WITH"}

# precedence: Or=1, And=2, Not=3, Comparison=4
def _bool_prec(bexpr: BooleanExpr) -> int:
    if isinstance(bexpr, Or):
        return 1
    if isinstance(bexpr, And):
        return 2
    if isinstance(bexpr, Not):
        return 3
    return 4


def render_bool(bexpr: BooleanExpr) -> str:
    if isinstance(bexpr, Comparison):
        op = _COMPARE_TEXT.get(bexpr.op, bexpr.op)
        return f"{render_expr(bexpr.left)} {op} {render_expr(bexpr.right)}"
    if isinstance(bexpr, (And, Or)):
        word = "AND" if isinstance(bexpr, And) else "OR"
        prec = _bool_prec(bexpr)
        left = render_bool(bexpr.left)
        if _bool_prec(bexpr.left) < prec:
            left = f"({left})"
        right = render_bool(bexpr.right)
        if _bool_prec(bexpr.right) <= prec:  # left-associative
            right = f"({right})"
        return f"{left} {word} {right}"
    inner = render_bool(bexpr.operand)
    if _bool_prec(bexpr.operand) <= _bool_prec(bexpr):
        inner = f"({inner})"
    return f"NOT {inner}"


def render_node(node: NodePattern) -> str:
    parts = ""
    if node.variable:
        parts += render_ident(node.variable)
    if node.label:
        parts += f":{render_ident(node.label)}"
    if node.properties:
        body = ", ".join(
            f"{render_ident(k)}: {render_literal(v)}" for k, v in node.properties.items()
        )
        parts += ("" if not parts else " ") + "{" + body + "}"
    return f"({parts})"


def render_rel(rel: RelPattern) -> str:
    body = ""
    if rel.variable:
        body += render_ident(rel.variable)
    if rel.rel_type:
        body += f":{render_ident(rel.rel_type)}"
    core = f"[{body}]"
    if rel.direction == RIGHT:
        return f"-{core}->"
    if rel.direction == LEFT:
        return f"<-{core}-"
    return f"-{core}-"


def render_pattern(pattern: PathPattern) -> str:
    out: list[str] = []
    for element in pattern.elements:
        if isinstance(element, NodePattern):
            out.append(render_node(element))
        else:
            out.append(render_rel(element))
    return "".join(out)


def render(ast: QueryAst) -> str:
    parts = ["MATCH " + ", ".join(render_pattern(p) for p in ast.patterns)]
    if ast.where is not None:
        parts.append("WHERE " + render_bool(ast.where))
    items = []
    for item in ast.return_items:
        text = render_expr(item.expr)
        if item.alias:
            text += f" AS {render_ident(item.alias)}"
        items.append(text)
    parts.append(("RETURN DISTINCT " if ast.distinct else "RETURN ") + ", ".join(items))
    if ast.order_by:
        orders = []
        for order in ast.order_by:
            text = render_expr(order.expr)
            if not order.ascending:
                text += " DESC"
            orders.append(text)
        parts.append("ORDER BY " + ", ".join(orders))
    if ast.skip is not None:
        parts.append(f"SKIP {ast.skip}")
    if ast.limit is not None:
        parts.append(f"LIMIT {ast.limit}")
    return " ".join(parts)
