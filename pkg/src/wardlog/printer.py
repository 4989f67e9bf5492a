"""Canonical source rendering of a Program AST.

`parse_program(format_program(p))` is structurally equal to `p`. Rule
bodies print positive atoms first and the remaining items in their
original order, which evaluates identically.
"""

from __future__ import annotations

from .ast import (
    AggregateCall,
    Annotation,
    Assignment,
    Atom,
    BinOp,
    Condition,
    Constant,
    Expression,
    FactStatement,
    FuncCall,
    Negation,
    Program,
    Rule,
    TermExpr,
    UnaryOp,
    Variable,
)

_PRECEDENCE = {
    "or": 1,
    "and": 2,
    "<": 4, "<=": 4, ">": 4, ">=": 4, "==": 4, "!=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
    "^": 8,
}
_UNARY_PRECEDENCE = {"not": 3, "-": 7}


def format_constant(value) -> str:
    if isinstance(value, bool):
        return "#T" if value else "#F"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    if isinstance(value, frozenset):
        members = sorted(value, key=lambda c: c.sort_key())
        return "[" + ", ".join(format_constant(m.value) for m in members) + "]"
    raise TypeError(f"constant {value!r} has no source form")


def format_term(term) -> str:
    if isinstance(term, Constant):
        return format_constant(term.value)
    if isinstance(term, Variable):
        return term.name
    raise TypeError(f"term {term!r} has no source form")


def format_expression(expr: Expression, parent_level: int = 0) -> str:
    if isinstance(expr, TermExpr):
        return format_term(expr.term)
    if isinstance(expr, FuncCall):
        args = ", ".join(format_expression(a) for a in expr.args)
        return f"{expr.namespace}:{expr.name}({args})"
    if isinstance(expr, UnaryOp):
        level = _UNARY_PRECEDENCE[expr.op]
        inner = format_expression(expr.operand, level)
        text = f"not {inner}" if expr.op == "not" else f"-{inner}"
        return f"({text})" if level < parent_level else text
    if isinstance(expr, BinOp):
        level = _PRECEDENCE[expr.op]
        if expr.op == "^":
            # right-associative; the base re-parses only as a primary
            left = format_expression(expr.left, 9)
            right = format_expression(expr.right, level)
        else:
            left = format_expression(expr.left, level)
            right = format_expression(expr.right, level + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if level < parent_level else text
    raise TypeError(f"cannot format {expr!r}")


def format_atom(atom: Atom) -> str:
    args = ", ".join(
        format_expression(a) if isinstance(a, Expression) else format_term(a)
        for a in atom.args
    )
    return f"{atom.predicate}({args})"


def _format_body_item(item) -> str:
    if isinstance(item, Negation):
        return f"not {format_atom(item.atom)}"
    if isinstance(item, Condition):
        return format_expression(item.expr)
    if isinstance(item, Assignment):
        rhs = item.expr
        if isinstance(rhs, AggregateCall):
            return f"{item.variable} = {rhs.op}({format_expression(rhs.argument)})"
        return f"{item.variable} = {format_expression(rhs)}"
    raise TypeError(f"cannot format {item!r}")


def format_rule(rule: Rule) -> str:
    parts = [format_atom(a) for a in rule.body]
    parts.extend(_format_body_item(i) for i in rule.items)
    prefix = f"{rule.weight!r} :: " if rule.weight is not None else ""
    return f"{prefix}{format_atom(rule.head)} :- {', '.join(parts)}."


def format_annotation(ann: Annotation) -> str:
    args = ", ".join(format_constant(a) for a in ann.args)
    return f"@{ann.kind}({args})."


def format_program(program: Program) -> str:
    lines = []
    for stmt in program.statements:
        if isinstance(stmt, Annotation):
            lines.append(format_annotation(stmt))
        elif isinstance(stmt, FactStatement):
            lines.append(f"{format_atom(stmt.atom)}.")
        elif isinstance(stmt, Rule):
            lines.append(format_rule(stmt))
        else:
            raise TypeError(f"cannot format {stmt!r}")
    return "\n".join(lines) + ("\n" if lines else "")
