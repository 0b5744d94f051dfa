"""Pattern-match evaluator for the Cypher subset.

Semantics:

* bindings assign nodes/edges satisfying labels, relationship types,
  directions, and property maps;
* relationship uniqueness: no edge is bound twice within one solution,
  across every pattern of the MATCH;
* absent properties and type-mismatched comparisons make a predicate
  false (strict mode raises EvalError for mismatches instead);
* aggregation (count/collect) groups by all non-aggregated return items;
* DISTINCT deduplicates whole rows; ORDER BY is a stable sort with
  absent values last regardless of direction; SKIP/LIMIT apply afterwards.

Solutions are canonically ordered by the tuple of bound entity ids in
pattern position order, which makes every downstream stage deterministic
and independent of the join plan.
"""

from __future__ import annotations

from functools import cmp_to_key
from typing import Any, Iterator, Optional

from ..errors import EvalError
from ..graph import INDEXED_KEYS, PropertyGraph
from .ast import (
    And,
    BooleanExpr,
    Comparison,
    Expr,
    FunctionCall,
    LEFT,
    Literal,
    NodePattern,
    Or,
    PathPattern,
    PropertyAccess,
    QueryAst,
    RelPattern,
    RIGHT,
    UNDIRECTED,
    Variable,
    is_aggregate,
    render_expr,
)
from .table import ResultTable, format_entity

Binding = dict[str, tuple[str, int]]


# -- value semantics ----------------------------------------------------------


def scalar_eq(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return False
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return False


def canonical_key(value: Any) -> tuple:
    """Hashable grouping/dedup key; numbers unify across int/float like Cypher."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, (int, float)):
        return ("n", float(value))
    if isinstance(value, list):
        return ("l", tuple(canonical_key(v) for v in value))
    return ("s", value)


def _rank(value: Any) -> int:
    if isinstance(value, bool):
        return 0
    if isinstance(value, (int, float)):
        return 1
    if isinstance(value, str):
        return 2
    return 3  # lists


def compare_values(a: Any, b: Any) -> int:
    """Total order over cell values; None collates after everything."""
    if a is None and b is None:
        return 0
    if a is None:
        return 1
    if b is None:
        return -1
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if isinstance(a, list):
        for x, y in zip(a, b):
            c = compare_values(x, y)
            if c:
                return c
        return (len(a) > len(b)) - (len(a) < len(b))
    return (a > b) - (a < b)


# -- matching -------------------------------------------------------------------


def _node_matches(graph: PropertyGraph, np: NodePattern, nid: int) -> bool:
    node = graph.nodes[nid]
    if np.label is not None and node.label != np.label:
        return False
    for key, literal in np.properties.items():
        if not scalar_eq(node.properties.get(key), literal):
            return False
    return True


def _seed_candidates(
    graph: PropertyGraph, np: NodePattern, env: Binding
) -> tuple[list[int], int]:
    if np.variable and np.variable in env:
        kind, bound_id = env[np.variable]
        if kind != "node":
            return [], 0
        return [bound_id], 0
    if np.label is not None:
        for key in INDEXED_KEYS:
            if key in np.properties:
                ids = graph.prop_index.get((np.label, key, np.properties[key]), set())
                return sorted(ids), len(ids)
        ids = graph.label_index.get(np.label, set())
        return sorted(ids), len(ids)
    return sorted(graph.nodes), len(graph.nodes)


def _edge_steps(
    graph: PropertyGraph, rp: RelPattern, bound_id: int, bound_is_left: bool
) -> list[tuple[int, int]]:
    """Candidate (edge id, far node id) pairs for a rel adjacent to a bound node."""
    pairs: set[tuple[int, int]] = set()
    want_out: bool  # does the edge leave the bound node?
    if rp.direction == RIGHT:
        want_out = bound_is_left
    elif rp.direction == LEFT:
        want_out = not bound_is_left
    else:
        want_out = True  # undirected: take both, below
    directions = [want_out] if rp.direction != UNDIRECTED else [True, False]
    for out in directions:
        edge_ids = graph.out_edges(bound_id) if out else graph.in_edges(bound_id)
        for eid in edge_ids:
            edge = graph.edges[eid]
            if rp.rel_type is not None and edge.rel_type != rp.rel_type:
                continue
            far = edge.target if out else edge.source
            pairs.add((eid, far))
    return sorted(pairs)


def _match_pattern(
    graph: PropertyGraph,
    pattern: PathPattern,
    env0: Binding,
    used0: frozenset[int],
) -> Iterator[tuple[Binding, list[int], frozenset[int]]]:
    elements = pattern.elements
    n = len(elements)
    node_positions = list(range(0, n, 2))

    best_pos = node_positions[0]
    best: Optional[tuple[list[int], int]] = None
    for pos in node_positions:
        cands, score = _seed_candidates(graph, elements[pos], env0)  # type: ignore[arg-type]
        if best is None or score < best[1]:
            best = (cands, score)
            best_pos = pos
    assert best is not None
    seed_cands = best[0]

    # visit plan: seed, then outward right, then outward left
    plan: list[tuple[int, int, bool]] = []  # (rel position, node position, stepping right)
    pos = best_pos
    while pos + 2 <= n - 1:
        plan.append((pos + 1, pos + 2, True))
        pos += 2
    pos = best_pos
    while pos - 2 >= 0:
        plan.append((pos - 1, pos - 2, False))
        pos -= 2

    env: Binding = dict(env0)
    assign: list[Optional[int]] = [None] * n
    used: set[int] = set(used0)

    def bind_node(np: NodePattern, nid: int) -> Optional[str]:
        """Bind a node var if fresh; returns the var name when newly bound."""
        if np.variable is None:
            return None
        if np.variable in env:
            return None  # caller already verified consistency
        env[np.variable] = ("node", nid)
        return np.variable

    def node_consistent(np: NodePattern, nid: int) -> bool:
        if np.variable and np.variable in env:
            kind, bound_id = env[np.variable]
            if kind != "node" or bound_id != nid:
                return False
        return _node_matches(graph, np, nid)

    results: list[tuple[Binding, list[int], frozenset[int]]] = []

    def step(plan_idx: int) -> None:
        if plan_idx == len(plan):
            results.append((dict(env), list(assign), frozenset(used)))  # type: ignore[arg-type]
            return
        rel_pos, node_pos, stepping_right = plan[plan_idx]
        rp: RelPattern = elements[rel_pos]  # type: ignore[assignment]
        np: NodePattern = elements[node_pos]  # type: ignore[assignment]
        bound_pos = node_pos - 2 if stepping_right else node_pos + 2
        bound_id = assign[bound_pos]
        assert bound_id is not None
        for eid, far in _edge_steps(graph, rp, bound_id, bound_is_left=stepping_right):
            if eid in used:
                continue
            if rp.variable and rp.variable in env and env[rp.variable] != ("rel", eid):
                continue
            if not node_consistent(np, far):
                continue
            used.add(eid)
            assign[rel_pos] = eid
            assign[node_pos] = far
            new_node_var = bind_node(np, far)
            new_rel_var = None
            if rp.variable and rp.variable not in env:
                env[rp.variable] = ("rel", eid)
                new_rel_var = rp.variable
            step(plan_idx + 1)
            used.discard(eid)
            assign[rel_pos] = None
            assign[node_pos] = None
            if new_node_var:
                del env[new_node_var]
            if new_rel_var:
                del env[new_rel_var]

    seed_np: NodePattern = elements[best_pos]  # type: ignore[assignment]
    for nid in seed_cands:
        if not node_consistent(seed_np, nid):
            continue
        assign[best_pos] = nid
        new_var = bind_node(seed_np, nid)
        step(0)
        assign[best_pos] = None
        if new_var:
            del env[new_var]

    return iter(results)


def match_solutions(
    graph: PropertyGraph, patterns: list[PathPattern]
) -> list[tuple[Binding, tuple[int, ...]]]:
    """All pattern solutions, canonically ordered by bound ids in slot order."""
    partials: list[tuple[Binding, list[int], frozenset[int]]] = [({}, [], frozenset())]
    for pattern in patterns:
        grown: list[tuple[Binding, list[int], frozenset[int]]] = []
        for env, assign, used in partials:
            for penv, passign, pused in _match_pattern(graph, pattern, env, used):
                grown.append((penv, assign + passign, pused))
        partials = grown
    solutions = [(env, tuple(assign)) for env, assign, _ in partials]
    solutions.sort(key=lambda pair: pair[1])
    return solutions


# -- expression evaluation --------------------------------------------------------


def _eval_expr(graph: PropertyGraph, env: Binding, expr: Expr) -> Any:
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
    if isinstance(expr, FunctionCall):
        if expr.name == "tolower":
            value = _eval_expr(graph, env, expr.arg) if expr.arg else None
            return value.lower() if isinstance(value, str) else None
        return None  # aggregates are handled by projection
    raise TypeError(f"not an expression: {expr!r}")


def _compare(op: str, left: Any, right: Any, strict: bool) -> bool:
    if left is None or right is None:
        return False
    if op == "=":
        return scalar_eq(left, right)
    if op == "<>":
        if _family(left) != _family(right):
            if strict:
                raise EvalError(f"type mismatch: {left!r} <> {right!r}")
            return False
        return left != right
    if op in ("CONTAINS", "STARTS_WITH", "ENDS_WITH"):
        if not (isinstance(left, str) and isinstance(right, str)):
            if strict:
                raise EvalError(f"text operator on non-text: {left!r}, {right!r}")
            return False
        if op == "CONTAINS":
            return right in left
        if op == "STARTS_WITH":
            return left.startswith(right)
        return left.endswith(right)
    family = _family(left)
    if family != _family(right) or family not in ("number", "text"):
        if strict:
            raise EvalError(f"cannot order {left!r} against {right!r}")
        return False
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown comparison operator {op!r}")


def _family(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "text"
    return "other"


def _eval_bool(graph: PropertyGraph, env: Binding, bexpr: BooleanExpr, strict: bool) -> bool:
    if isinstance(bexpr, Comparison):
        left = _eval_expr(graph, env, bexpr.left)
        right = _eval_expr(graph, env, bexpr.right)
        return _compare(bexpr.op, left, right, strict)
    if isinstance(bexpr, And):
        return _eval_bool(graph, env, bexpr.left, strict) and _eval_bool(
            graph, env, bexpr.right, strict
        )
    if isinstance(bexpr, Or):
        return _eval_bool(graph, env, bexpr.left, strict) or _eval_bool(
            graph, env, bexpr.right, strict
        )
    return not _eval_bool(graph, env, bexpr.operand, strict)


# -- projection ---------------------------------------------------------------------


def _aggregate_value(
    graph: PropertyGraph, call: FunctionCall, group: list[Binding]
) -> Any:
    if call.name == "count":
        if call.arg is None:
            return len(group)
        return sum(1 for env in group if _eval_expr(graph, env, call.arg) is not None)
    values = [_eval_expr(graph, env, call.arg) for env in group]
    return [v for v in values if v is not None]


def _order_sort(
    rows: list[tuple[tuple, Binding]],
    ast: QueryAst,
    graph: PropertyGraph,
) -> list[tuple[tuple, Binding]]:
    if not ast.order_by:
        return rows
    alias_to_col = {
        item.alias: idx for idx, item in enumerate(ast.return_items) if item.alias
    }
    expr_to_col: dict[str, int] = {}
    for idx, item in enumerate(ast.return_items):
        expr_to_col.setdefault(render_expr(item.expr), idx)

    def order_values(row: tuple, env: Binding) -> list:
        values = []
        for order in ast.order_by:
            rendered = render_expr(order.expr)
            if rendered in expr_to_col:
                values.append(row[expr_to_col[rendered]])
            elif isinstance(order.expr, Variable) and order.expr.name in alias_to_col:
                values.append(row[alias_to_col[order.expr.name]])
            else:
                values.append(_eval_expr(graph, env, order.expr))
        return values

    directions = [order.ascending for order in ast.order_by]
    keyed = [(order_values(row, env), row, env) for row, env in rows]

    def cmp(a, b) -> int:
        for va, vb, ascending in zip(a[0], b[0], directions):
            c = compare_values(va, vb)
            if c == 0:
                continue
            if va is None or vb is None:
                return c  # absent values sort last regardless of direction
            return c if ascending else -c
        return 0

    keyed.sort(key=cmp_to_key(cmp))
    return [(row, env) for _, row, env in keyed]


def project(
    graph: PropertyGraph,
    ast: QueryAst,
    solutions: list[tuple[Binding, tuple[int, ...]]],
    strict: bool = False,
) -> ResultTable:
    """Shared WHERE/RETURN/ORDER/SKIP/LIMIT stage over matched solutions."""
    envs = [env for env, _ in solutions]
    if ast.where is not None:
        envs = [env for env in envs if _eval_bool(graph, env, ast.where, strict)]

    items = ast.return_items
    columns = [item.alias or render_expr(item.expr) for item in items]
    has_agg = any(is_aggregate(item.expr) for item in items)

    rows: list[tuple[tuple, Binding]]
    if not has_agg:
        rows = [
            (tuple(_eval_expr(graph, env, item.expr) for item in items), env)
            for env in envs
        ]
    else:
        group_indexes = [i for i, item in enumerate(items) if not is_aggregate(item.expr)]
        groups: dict[tuple, tuple[list, list[Binding]]] = {}
        for env in envs:
            group_values = [_eval_expr(graph, env, items[i].expr) for i in group_indexes]
            key = tuple(canonical_key(v) for v in group_values)
            if key not in groups:
                groups[key] = (group_values, [])
            groups[key][1].append(env)
        if not group_indexes and not groups:
            groups[()] = ([], [])
        rows = []
        for group_values, members in groups.values():
            cells: list[Any] = []
            value_iter = iter(group_values)
            for item in items:
                if is_aggregate(item.expr):
                    cells.append(_aggregate_value(graph, item.expr, members))  # type: ignore[arg-type]
                else:
                    cells.append(next(value_iter))
            representative = members[0] if members else {}
            rows.append((tuple(cells), representative))

    if ast.distinct:
        seen: set[tuple] = set()
        deduped = []
        for row, env in rows:
            key = tuple(canonical_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                deduped.append((row, env))
        rows = deduped

    rows = _order_sort(rows, ast, graph)

    start = ast.skip or 0
    end = None if ast.limit is None else start + ast.limit
    rows = rows[start:end]
    return ResultTable(columns=columns, rows=[row for row, _ in rows])


def evaluate(graph: PropertyGraph, ast: QueryAst, strict: bool = False) -> ResultTable:
    """Run a parsed query against a graph; never mutates the graph."""
    solutions = match_solutions(graph, ast.patterns)
    return project(graph, ast, solutions, strict=strict)
