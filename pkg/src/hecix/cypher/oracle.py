"""Brute-force matching oracle for equivalence testing.

Enumerates every node/edge assignment for each pattern slot and filters by
the declared constraints, instead of index-seeded expansion.  Everything
downstream of matching (predicates, projection, grouping, ordering) is also
re-implemented here in the most literal way possible, so a bug in the main
evaluator cannot hide in shared code.  Only the AST types, graph accessors,
and the entity text renderer are shared.
"""

from __future__ import annotations

from functools import cmp_to_key
from typing import Any, Optional

from ..errors import SizeLimit
from ..graph import PropertyGraph
from .ast import (
    And,
    Comparison,
    FunctionCall,
    LEFT,
    Literal,
    NodePattern,
    Or,
    PropertyAccess,
    QueryAst,
    RIGHT,
    Variable,
    render_expr,
)
from .table import ResultTable, format_entity

MAX_ORACLE_NODES = 50


def _value_family(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "text"
    return "other"


def _values_equal(a: Any, b: Any) -> bool:
    fa, fb = _value_family(a), _value_family(b)
    if fa == "none" or fb == "none" or fa != fb:
        return False
    if fa == "bool":
        return a is b
    return a == b


def _group_key(value: Any) -> tuple:
    family = _value_family(value)
    if family == "none":
        return ("null",)
    if family == "bool":
        return ("b", value)
    if family == "number":
        return ("n", float(value))
    if isinstance(value, list):
        return ("l", tuple(_group_key(v) for v in value))
    return ("s", value)


def _node_ok(graph: PropertyGraph, np: NodePattern, nid: int) -> bool:
    node = graph.nodes[nid]
    if np.label is not None and node.label != np.label:
        return False
    for key, literal in np.properties.items():
        if not _values_equal(node.properties.get(key), literal):
            return False
    return True


def _enumerate_pattern(graph, pattern, env0, used0):
    """Yield (env, slot assignment, used edges) by trying every candidate."""
    elements = pattern.elements
    node_ids = sorted(graph.nodes)
    edge_ids = sorted(graph.edges)

    out: list[tuple[dict, list[int], set[int]]] = []

    def assign_node(np: NodePattern, nid: int, env: dict) -> Optional[dict]:
        if not _node_ok(graph, np, nid):
            return None
        if np.variable:
            if np.variable in env:
                if env[np.variable] != ("node", nid):
                    return None
                return env
            env = dict(env)
            env[np.variable] = ("node", nid)
        return env

    def recurse(pos: int, env: dict, assign: list[int], used: set[int]) -> None:
        if pos >= len(elements):
            out.append((env, list(assign), set(used)))
            return
        rel = elements[pos]
        node_pattern = elements[pos + 1]
        left_id = assign[pos - 1]
        for eid in edge_ids:
            if eid in used:
                continue
            edge = graph.edges[eid]
            if rel.rel_type is not None and edge.rel_type != rel.rel_type:
                continue
            # orientations consistent with the bound left-hand node
            far_nodes: set[int] = set()
            if rel.direction == RIGHT:
                if edge.source == left_id:
                    far_nodes.add(edge.target)
            elif rel.direction == LEFT:
                if edge.target == left_id:
                    far_nodes.add(edge.source)
            else:
                if edge.source == left_id:
                    far_nodes.add(edge.target)
                if edge.target == left_id:
                    far_nodes.add(edge.source)
            for far in sorted(far_nodes):
                env2 = env
                if rel.variable:
                    if rel.variable in env2 and env2[rel.variable] != ("rel", eid):
                        continue
                    env2 = dict(env2)
                    env2[rel.variable] = ("rel", eid)
                env3 = assign_node(node_pattern, far, env2)
                if env3 is None:
                    continue
                used.add(eid)
                recurse(pos + 2, env3, assign + [eid, far], used)
                used.discard(eid)

    first = elements[0]
    for nid in node_ids:
        env = assign_node(first, nid, env0)
        if env is None:
            continue
        recurse(1, env, [nid], set(used0))
    return out


def _eval(graph: PropertyGraph, env: dict, expr) -> Any:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Variable):
        if expr.name not in env:
            return None
        kind, entity_id = env[expr.name]
        return format_entity(graph, kind, entity_id)
    if isinstance(expr, PropertyAccess):
        if expr.variable not in env:
            return None
        kind, entity_id = env[expr.variable]
        record = graph.nodes[entity_id] if kind == "node" else graph.edges[entity_id]
        return record.properties.get(expr.key)
    if isinstance(expr, FunctionCall) and expr.name == "tolower":
        value = _eval(graph, env, expr.arg) if expr.arg else None
        return value.lower() if isinstance(value, str) else None
    return None


def _predicate(graph: PropertyGraph, env: dict, bexpr) -> bool:
    if isinstance(bexpr, Comparison):
        left = _eval(graph, env, bexpr.left)
        right = _eval(graph, env, bexpr.right)
        fl, fr = _value_family(left), _value_family(right)
        if fl == "none" or fr == "none":
            return False
        if bexpr.op == "=":
            return _values_equal(left, right)
        if bexpr.op == "<>":
            return fl == fr and left != right
        if bexpr.op in ("CONTAINS", "STARTS_WITH", "ENDS_WITH"):
            if fl != "text" or fr != "text":
                return False
            if bexpr.op == "CONTAINS":
                return right in left
            if bexpr.op == "STARTS_WITH":
                return left.startswith(right)
            return left.endswith(right)
        if fl != fr or fl not in ("number", "text"):
            return False
        if bexpr.op == "<":
            return left < right
        if bexpr.op == "<=":
            return left <= right
        if bexpr.op == ">":
            return left > right
        return left >= right
    if isinstance(bexpr, And):
        return _predicate(graph, env, bexpr.left) and _predicate(graph, env, bexpr.right)
    if isinstance(bexpr, Or):
        return _predicate(graph, env, bexpr.left) or _predicate(graph, env, bexpr.right)
    return not _predicate(graph, env, bexpr.operand)


def _is_agg(expr) -> bool:
    return isinstance(expr, FunctionCall) and expr.name in ("count", "collect")


def _order_rank(value: Any) -> int:
    return {"bool": 0, "number": 1, "text": 2}.get(_value_family(value), 3)


def _cmp(a: Any, b: Any) -> int:
    if a is None and b is None:
        return 0
    if a is None:
        return 1
    if b is None:
        return -1
    ra, rb = _order_rank(a), _order_rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if isinstance(a, list):
        for x, y in zip(a, b):
            c = _cmp(x, y)
            if c:
                return c
        return (len(a) > len(b)) - (len(a) < len(b))
    return (a > b) - (a < b)


def brute_force_match(graph: PropertyGraph, ast: QueryAst) -> ResultTable:
    if len(graph.nodes) > MAX_ORACLE_NODES:
        raise SizeLimit(
            f"oracle bound is {MAX_ORACLE_NODES} nodes, graph has {len(graph.nodes)}"
        )

    partials: list[tuple[dict, list[int], set[int]]] = [({}, [], set())]
    for pattern in ast.patterns:
        grown = []
        for env, assign, used in partials:
            for penv, passign, pused in _enumerate_pattern(graph, pattern, env, used):
                grown.append((penv, assign + passign, pused))
        partials = grown
    partials.sort(key=lambda triple: tuple(triple[1]))

    envs = [env for env, _, _ in partials]
    if ast.where is not None:
        envs = [env for env in envs if _predicate(graph, env, ast.where)]

    items = ast.return_items
    columns = [item.alias or render_expr(item.expr) for item in items]

    rows: list[tuple[tuple, dict]]
    if not any(_is_agg(item.expr) for item in items):
        rows = [
            (tuple(_eval(graph, env, item.expr) for item in items), env) for env in envs
        ]
    else:
        plain = [i for i, item in enumerate(items) if not _is_agg(item.expr)]
        buckets: dict[tuple, tuple[list, list[dict]]] = {}
        for env in envs:
            values = [_eval(graph, env, items[i].expr) for i in plain]
            key = tuple(_group_key(v) for v in values)
            buckets.setdefault(key, (values, []))[1].append(env)
        if not plain and not buckets:
            buckets[()] = ([], [])
        rows = []
        for values, members in buckets.values():
            cells = []
            plain_iter = iter(values)
            for item in items:
                if _is_agg(item.expr):
                    call = item.expr
                    if call.name == "count":
                        if call.arg is None:
                            cells.append(len(members))
                        else:
                            cells.append(
                                sum(
                                    1
                                    for env in members
                                    if _eval(graph, env, call.arg) is not None
                                )
                            )
                    else:
                        collected = [_eval(graph, env, call.arg) for env in members]
                        cells.append([v for v in collected if v is not None])
                else:
                    cells.append(next(plain_iter))
            rows.append((tuple(cells), members[0] if members else {}))

    if ast.distinct:
        seen: set[tuple] = set()
        kept = []
        for row, env in rows:
            key = tuple(_group_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                kept.append((row, env))
        rows = kept

    if ast.order_by:
        aliases = {item.alias: i for i, item in enumerate(items) if item.alias}
        rendered = {}
        for i, item in enumerate(items):
            rendered.setdefault(render_expr(item.expr), i)

        def sort_values(row: tuple, env: dict) -> list:
            values = []
            for order in ast.order_by:
                text = render_expr(order.expr)
                if text in rendered:
                    values.append(row[rendered[text]])
                elif isinstance(order.expr, Variable) and order.expr.name in aliases:
                    values.append(row[aliases[order.expr.name]])
                else:
                    values.append(_eval(graph, env, order.expr))
            return values

        ascending = [order.ascending for order in ast.order_by]
        keyed = [(sort_values(row, env), row) for row, env in rows]

        def compare(a, b) -> int:
            for va, vb, asc in zip(a[0], b[0], ascending):
                c = _cmp(va, vb)
                if c == 0:
                    continue
                if va is None or vb is None:
                    return c
                return c if asc else -c
            return 0

        keyed.sort(key=cmp_to_key(compare))
        ordered_rows = [row for _, row in keyed]
    else:
        ordered_rows = [row for row, _ in rows]

    start = ast.skip or 0
    end = None if ast.limit is None else start + ast.limit
    return ResultTable(columns=columns, rows=ordered_rows[start:end])
