"""Expression evaluation and the built-in function library.

Evaluation is over ground bindings: every variable must be bound to a
constant or labelled null. Arithmetic and ordering on nulls (labelled or
marked) raise EvalError; equality on labelled nulls is identity.

Two built-in libraries ship with the engine, addressed as `math:` and
`string:`. An `@library("m:", "math").` annotation aliases a prefix to
one of them.
"""

from __future__ import annotations

import datetime
import math

from .ast import (
    MARKED_NULL,
    BinOp,
    Constant,
    Expression,
    FuncCall,
    Null,
    Term,
    TermExpr,
    UnaryOp,
    Variable,
    _MarkedNull,
    _rank,
)
from .errors import EvalError


def _num(value, what: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EvalError(f"{what} needs a number, got {value!r}")
    return value


def _numeric_pair(op: str, a, b):
    return _num(a, f"'{op}'"), _num(b, f"'{op}'")


def _arith(op: str, a, b):
    a, b = _numeric_pair(op, a, b)
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            # integer division would silently truncate shares; always double
            return a / b
        if op == "^":
            if isinstance(a, int) and isinstance(b, int) and b >= 0:
                return a**b
            return float(a) ** float(b)
    except ZeroDivisionError:
        raise EvalError("division by zero") from None
    except (OverflowError, ValueError) as exc:
        raise EvalError(f"arithmetic error in '{op}': {exc}") from None
    raise EvalError(f"unknown operator {op}")


def _ordered(op: str, a, b):
    comparable = (
        (isinstance(a, (int, float)) and not isinstance(a, bool)
         and isinstance(b, (int, float)) and not isinstance(b, bool))
        or (isinstance(a, str) and isinstance(b, str))
        or (isinstance(a, bool) and isinstance(b, bool))
        or (isinstance(a, datetime.date) and isinstance(b, datetime.date))
    )
    if not comparable:
        raise EvalError(f"cannot order {a!r} {op} {b!r}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def evaluate(expr: Expression, binding: dict[str, Term], libraries=None) -> Term:
    """Evaluate a ground expression to a Constant (or pass a Null through)."""
    if isinstance(expr, TermExpr):
        term = expr.term
        if isinstance(term, Variable):
            bound = binding.get(term.name)
            if bound is None:
                raise EvalError(f"variable {term.name} is not bound")
            return bound
        return term
    if isinstance(expr, UnaryOp):
        val = evaluate(expr.operand, binding, libraries)
        if expr.op == "-":
            return Constant(-_num(_constant_value(val, "'-'"), "'-'"))
        inner = _constant_value(val, "'not'")
        if not isinstance(inner, bool):
            raise EvalError(f"'not' needs a boolean, got {inner!r}")
        return Constant(not inner)
    if isinstance(expr, BinOp):
        return _eval_binop(expr, binding, libraries)
    if isinstance(expr, FuncCall):
        return _eval_call(expr, binding, libraries)
    raise EvalError(f"cannot evaluate {expr!r}")


def _constant_value(term: Term, what: str):
    if isinstance(term, Null):
        raise EvalError(f"{what} applied to a labelled null")
    value = term.value
    if value is MARKED_NULL:
        raise EvalError(f"{what} applied to a marked null")
    return value


def _eval_binop(expr: BinOp, binding, libraries) -> Term:
    op = expr.op
    left = evaluate(expr.left, binding, libraries)
    if op in ("and", "or"):
        lval = _constant_value(left, f"'{op}'")
        if not isinstance(lval, bool):
            raise EvalError(f"'{op}' needs booleans, got {lval!r}")
        if op == "and" and not lval:
            return Constant(False)
        if op == "or" and lval:
            return Constant(True)
        rval = _constant_value(evaluate(expr.right, binding, libraries), f"'{op}'")
        if not isinstance(rval, bool):
            raise EvalError(f"'{op}' needs booleans, got {rval!r}")
        return Constant(rval)

    right = evaluate(expr.right, binding, libraries)
    if op in ("==", "!="):
        eq = _terms_equal(left, right)
        return Constant(eq if op == "==" else not eq)
    if op in ("<", "<=", ">", ">="):
        a = _constant_value(left, f"'{op}'")
        b = _constant_value(right, f"'{op}'")
        return Constant(_ordered(op, a, b))

    a = _constant_value(left, f"'{op}'")
    b = _constant_value(right, f"'{op}'")
    if op == "+" and isinstance(a, str) and isinstance(b, str):
        return Constant(a + b)
    return Constant(_arith(op, a, b))


def _terms_equal(a: Term, b: Term) -> bool:
    if isinstance(a, Null) or isinstance(b, Null):
        return isinstance(a, Null) and isinstance(b, Null) and a.id == b.id
    av, bv = a.value, b.value
    if _rank(av) != _rank(bv):
        return False
    return av == bv


# ---------------------------------------------------------------------------
# Built-in libraries
# ---------------------------------------------------------------------------

def _m_sqrt(x):
    x = _num(x, "math:sqrt")
    if x < 0:
        raise EvalError(f"math:sqrt of negative value {x}")
    return math.sqrt(x)


def _m_log(x):
    x = _num(x, "math:log")
    if x <= 0:
        raise EvalError(f"math:log of non-positive value {x}")
    return math.log(x)


MATH_LIBRARY = {
    "sqrt": (1, _m_sqrt),
    "abs": (1, lambda x: abs(_num(x, "math:abs"))),
    "floor": (1, lambda x: math.floor(_num(x, "math:floor"))),
    "ceil": (1, lambda x: math.ceil(_num(x, "math:ceil"))),
    "exp": (1, lambda x: math.exp(_num(x, "math:exp"))),
    "log": (1, _m_log),
    "pow": (2, lambda x, y: _arith("^", x, y)),
    "min": (2, lambda x, y: min(_num(x, "math:min"), _num(y, "math:min"))),
    "max": (2, lambda x, y: max(_num(x, "math:max"), _num(y, "math:max"))),
}


def _s_str(x, what):
    if not isinstance(x, str):
        raise EvalError(f"{what} needs a string, got {x!r}")
    return x


STRING_LIBRARY = {
    "concat": (2, lambda a, b: _s_str(a, "string:concat") + _s_str(b, "string:concat")),
    "length": (1, lambda s: len(_s_str(s, "string:length"))),
    "upper": (1, lambda s: _s_str(s, "string:upper").upper()),
    "lower": (1, lambda s: _s_str(s, "string:lower").lower()),
    "contains": (2, lambda s, t: _s_str(t, "string:contains") in _s_str(s, "string:contains")),
    "starts_with": (2, lambda s, t: _s_str(s, "string:starts_with").startswith(_s_str(t, "string:starts_with"))),
    "ends_with": (2, lambda s, t: _s_str(s, "string:ends_with").endswith(_s_str(t, "string:ends_with"))),
}

BUILTIN_LIBRARIES = {"math": MATH_LIBRARY, "string": STRING_LIBRARY}

DEFAULT_NAMESPACES = {"math": "math", "string": "string"}


def resolve_libraries(program) -> dict[str, dict]:
    """Map every usable namespace prefix to its function table.

    @library("m:", "math") aliases prefix m to the math library; the
    built-in prefixes stay available. Unknown library names are rejected.
    """
    from .errors import PlanError

    namespaces = dict(DEFAULT_NAMESPACES)
    for ann in program.annotations_of("library"):
        prefix, name = ann.args
        prefix = prefix.rstrip(":")
        if name not in BUILTIN_LIBRARIES:
            raise PlanError(f"@library: no library named {name!r} is available", ann.span)
        namespaces[prefix] = name
    return {prefix: BUILTIN_LIBRARIES[name] for prefix, name in namespaces.items()}


def _eval_call(expr: FuncCall, binding, libraries) -> Term:
    libraries = libraries if libraries is not None else {
        p: BUILTIN_LIBRARIES[n] for p, n in DEFAULT_NAMESPACES.items()
    }
    table = libraries.get(expr.namespace)
    if table is None:
        raise EvalError(f"unknown function namespace {expr.namespace}:")
    entry = table.get(expr.name)
    if entry is None:
        raise EvalError(f"unknown function {expr.namespace}:{expr.name}")
    arity, impl = entry
    if len(expr.args) != arity:
        raise EvalError(
            f"{expr.namespace}:{expr.name} takes {arity} argument{'s' if arity != 1 else ''}"
        )
    values = [
        _constant_value(evaluate(a, binding, libraries), f"{expr.namespace}:{expr.name}")
        for a in expr.args
    ]
    try:
        return Constant(impl(*values))
    except EvalError:
        raise
    except (ValueError, OverflowError) as exc:
        raise EvalError(f"{expr.namespace}:{expr.name}: {exc}") from None


def check_calls(program, libraries: dict[str, dict]):
    """Plan-time validation that every function call resolves."""
    from .errors import PlanError

    def walk(expr):
        if isinstance(expr, FuncCall):
            table = libraries.get(expr.namespace)
            if table is None or expr.name not in table:
                raise PlanError(
                    f"unknown function {expr.namespace}:{expr.name}", None
                )
            for a in expr.args:
                walk(a)
        elif isinstance(expr, BinOp):
            walk(expr.left)
            walk(expr.right)
        elif isinstance(expr, UnaryOp):
            walk(expr.operand)

    from .ast import AggregateCall, Assignment, Condition, Expression

    for rule in program.rules:
        for arg in rule.head.args:
            if isinstance(arg, Expression):
                walk(arg)
        for item in rule.items:
            if isinstance(item, Condition):
                walk(item.expr)
            elif isinstance(item, Assignment):
                target = item.expr
                walk(target.argument if isinstance(target, AggregateCall) else target)
