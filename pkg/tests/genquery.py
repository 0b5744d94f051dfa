"""Seeded random graph and query generators for equivalence testing.

Everything is driven by an explicit ``random.Random`` so failures reproduce
from the seed alone.  Queries stay inside the evaluator's subset and only
reference variables their own patterns bind.
"""

from __future__ import annotations

import random
from collections import Counter

from hecix.cypher.ast import (
    And,
    Comparison,
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
    UNDIRECTED,
    Variable,
)
from hecix.cypher.table import ResultTable
from hecix.graph import PropertyGraph

LABELS = ["Disease", "Gene", "Study", "Side Effect"]
REL_TYPES = ["TREATS", "ASSOCIATES", "STUDIES"]
NAMES = ["alpha", "beta", "gamma"]
PROP_KEYS = ["name", "weight", "flag"]
STRINGS = ["alpha", "beta", "it's", "a\\b", "tab\tchar", "Zeta"]
NODE_VARS = ["a", "b", "c", "d"]
DIRECTIONS = [LEFT, RIGHT, UNDIRECTED]
COMPARE_OPS = ["=", "<>", "<", "<=", ">", ">=", "CONTAINS", "STARTS_WITH", "ENDS_WITH"]


def random_graph(rng: random.Random, max_nodes: int = 30, max_edges: int = 60) -> PropertyGraph:
    graph = PropertyGraph()
    n_nodes = rng.randint(0, max_nodes)
    for _ in range(n_nodes):
        props = {}
        if rng.random() < 0.9:
            props["name"] = rng.choice(NAMES)
        if rng.random() < 0.5:
            props["weight"] = rng.randint(1, 4)
        if rng.random() < 0.2:
            props["flag"] = rng.random() < 0.5
        label = LABELS[0] if rng.random() < 0.4 else rng.choice(LABELS)
        graph.add_node(label, props)
    if n_nodes:
        for _ in range(rng.randint(0, max_edges)):
            props = {"weight": rng.randint(1, 4)} if rng.random() < 0.2 else {}
            graph.add_edge(
                rng.choice(REL_TYPES),
                rng.randrange(n_nodes),
                rng.randrange(n_nodes),
                props,
            )
    return graph


def _random_node_pattern(rng: random.Random) -> NodePattern:
    variable = rng.choice(NODE_VARS) if rng.random() < 0.7 else None
    label = rng.choice(LABELS) if rng.random() < 0.45 else None
    props = {}
    if rng.random() < 0.2:
        key = rng.choice(["name", "weight"])
        props[key] = rng.choice(NAMES) if key == "name" else rng.randint(1, 4)
    return NodePattern(variable=variable, label=label, properties=props)


def _random_literal(rng: random.Random) -> Literal:
    roll = rng.random()
    if roll < 0.5:
        return Literal(rng.choice(STRINGS))
    if roll < 0.8:
        return Literal(rng.randint(-2, 9))
    if roll < 0.9:
        return Literal(rng.random() < 0.5)
    return Literal(round(rng.uniform(0, 9), 2))


def _random_value_expr(rng: random.Random, bound: list[str]):
    roll = rng.random()
    if roll < 0.55:
        return PropertyAccess(rng.choice(bound), rng.choice(PROP_KEYS))
    if roll < 0.7:
        return FunctionCall(
            "tolower", PropertyAccess(rng.choice(bound), rng.choice(PROP_KEYS))
        )
    if roll < 0.85:
        return Variable(rng.choice(bound))
    return _random_literal(rng)


def _random_comparison(rng: random.Random, bound: list[str]) -> Comparison:
    left = _random_value_expr(rng, bound)
    right = _random_literal(rng) if rng.random() < 0.7 else _random_value_expr(rng, bound)
    return Comparison(op=rng.choice(COMPARE_OPS), left=left, right=right)


def _random_bool(rng: random.Random, bound: list[str], depth: int = 0):
    if depth >= 2 or rng.random() < 0.5:
        return _random_comparison(rng, bound)
    roll = rng.random()
    if roll < 0.4:
        return And(_random_bool(rng, bound, depth + 1), _random_bool(rng, bound, depth + 1))
    if roll < 0.8:
        return Or(_random_bool(rng, bound, depth + 1), _random_bool(rng, bound, depth + 1))
    return Not(_random_bool(rng, bound, depth + 1))


def random_query(rng: random.Random, max_rels: int = 3) -> QueryAst:
    total_rels = rng.randint(0, max_rels)
    if total_rels >= 1 and rng.random() < 0.3:
        split = rng.randint(0, total_rels)
        pattern_sizes = [split, total_rels - split]
    else:
        pattern_sizes = [total_rels]

    rel_counter = 0
    patterns = []
    for size in pattern_sizes:
        elements: list = [_random_node_pattern(rng)]
        for _ in range(size):
            rel_var = None
            if rng.random() < 0.4:
                rel_var = f"r{rel_counter}"
                rel_counter += 1
            elements.append(
                RelPattern(
                    variable=rel_var,
                    rel_type=rng.choice(REL_TYPES) if rng.random() < 0.45 else None,
                    direction=rng.choice(DIRECTIONS),
                )
            )
            elements.append(_random_node_pattern(rng))
        patterns.append(PathPattern(elements=elements))

    bound = sorted(QueryAst(patterns=patterns, return_items=[]).bound_variables())

    where = None
    if bound and rng.random() < 0.5:
        where = _random_bool(rng, bound)

    items: list[ReturnItem] = []
    has_agg = False
    for index in range(rng.randint(1, 3)):
        if bound and rng.random() < 0.25:
            has_agg = True
            if rng.random() < 0.4:
                expr = FunctionCall("count", None)
            elif rng.random() < 0.5:
                expr = FunctionCall(
                    "count", PropertyAccess(rng.choice(bound), rng.choice(PROP_KEYS))
                )
            else:
                expr = FunctionCall(
                    "collect", PropertyAccess(rng.choice(bound), rng.choice(PROP_KEYS))
                )
        elif bound and rng.random() < 0.8:
            expr = _random_value_expr(rng, bound)
        else:
            expr = FunctionCall("count", None) if rng.random() < 0.3 else _random_literal(rng)
            has_agg = has_agg or isinstance(expr, FunctionCall)
        alias = f"x{index}" if rng.random() < 0.25 else None
        items.append(ReturnItem(expr=expr, alias=alias))

    order_by: list[OrderItem] = []
    if rng.random() < 0.4:
        for _ in range(rng.randint(1, 2)):
            if has_agg or not bound or rng.random() < 0.7:
                source = rng.choice(items)
                if source.alias and rng.random() < 0.5:
                    expr = Variable(source.alias)
                else:
                    expr = source.expr
            else:
                expr = _random_value_expr(rng, bound)
            order_by.append(OrderItem(expr=expr, ascending=rng.random() < 0.6))

    skip = rng.randint(0, 3) if rng.random() < 0.25 else None
    limit = rng.randint(0, 5) if rng.random() < 0.3 else None

    return QueryAst(
        patterns=patterns,
        where=where,
        return_items=items,
        distinct=rng.random() < 0.3,
        order_by=order_by,
        skip=skip,
        limit=limit,
    )


def _canon_cell(value) -> tuple:
    if value is None:
        return ("none",)
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, (int, float)):
        return ("n", float(value))
    if isinstance(value, list):
        return ("L", tuple(_canon_cell(v) for v in value))
    return ("s", value)


def row_multiset(table: ResultTable) -> Counter:
    return Counter(tuple(_canon_cell(cell) for cell in row) for row in table.rows)
