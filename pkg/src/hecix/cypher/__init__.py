"""Lexer, parser, validator, evaluator, and testing oracle for the Cypher subset."""

from .ast import (
    And,
    BooleanExpr,
    Comparison,
    Expr,
    FunctionCall,
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
    Variable,
    render,
)
from .evaluator import evaluate
from .lexer import Token, tokenize
from .oracle import brute_force_match
from .parser import SchemaWarning, parse, validate
from .table import ResultTable, format_table, render_cell

__all__ = [
    "And",
    "BooleanExpr",
    "Comparison",
    "Expr",
    "FunctionCall",
    "Literal",
    "NodePattern",
    "Not",
    "Or",
    "OrderItem",
    "PathPattern",
    "PropertyAccess",
    "QueryAst",
    "RelPattern",
    "ReturnItem",
    "ResultTable",
    "SchemaWarning",
    "Token",
    "Variable",
    "brute_force_match",
    "evaluate",
    "format_table",
    "parse",
    "render",
    "render_cell",
    "tokenize",
    "validate",
]
