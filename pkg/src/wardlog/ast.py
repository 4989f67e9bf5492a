"""AST for the rule language: terms, expressions, atoms, rules, annotations.

Terms are the ground building blocks. Constants carry a typed payload
(string, integer, double, boolean, date, set of constants, or the marked
null standing for an unknown value). Variables exist only in rule source;
labelled nulls exist only at evaluation time, minted for existential head
variables, and never appear in parsed source.

Equality on constants is type-tagged: the integer 1, the double 1.0, and
the boolean #T are three distinct constants even though Python would
happily compare their payloads equal.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class _MarkedNull:
    """Singleton payload for the unknown-value constant."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "#N"


MARKED_NULL = _MarkedNull()

ConstantValue = Union[str, int, float, bool, datetime.date, frozenset, _MarkedNull]

# Ranks used for type-tagged equality and for the deterministic term order
# (marked null < booleans < numbers < dates < strings < sets).
_TYPE_RANK = {
    _MarkedNull: 0,
    bool: 1,
    int: 2,
    float: 2,
    datetime.date: 3,
    str: 4,
    frozenset: 5,
}


def _rank(value) -> int:
    # bool is an int subclass; test it first.
    if isinstance(value, bool):
        return _TYPE_RANK[bool]
    return _TYPE_RANK[type(value)]


class Term:
    __slots__ = ()


class Constant(Term):
    """A typed constant. int and float payloads are distinct constants."""

    __slots__ = ("value",)

    def __init__(self, value: ConstantValue):
        if isinstance(value, (set, tuple, list)):
            value = frozenset(value)
        self.value = value

    def __eq__(self, other):
        return (
            isinstance(other, Constant)
            and _rank(self.value) == _rank(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((Constant, _rank(self.value), self.value))

    def __repr__(self):
        return f"Constant({self.value!r})"

    def sort_key(self):
        v = self.value
        r = _rank(v)
        if r == 0:
            return (0, 0, "")
        if isinstance(v, bool):
            return (1, int(v), "")
        if isinstance(v, (int, float)):
            # ints and doubles interleave by numeric value; the type tag
            # breaks ties so 1 and 1.0 order deterministically.
            return (2, float(v), "int" if isinstance(v, int) else "float")
        if isinstance(v, datetime.date):
            return (3, 0, v.isoformat())
        if isinstance(v, str):
            return (4, 0, v)
        return (5, 0, repr(sorted(c.sort_key() for c in v)))


@dataclass(frozen=True, slots=True)
class Variable(Term):
    name: str

    def __repr__(self):
        return f"Variable({self.name})"


class Null(Term):
    """Labelled null: a fresh witness minted for an existential variable.

    Identity is the numeric id. `depth` records how many null-creation
    steps separate it from the input database (used by the safety cap).
    """

    __slots__ = ("id", "depth")

    def __init__(self, id: int, depth: int = 1):
        self.id = id
        self.depth = depth

    def __eq__(self, other):
        return isinstance(other, Null) and other.id == self.id

    def __hash__(self):
        return hash((Null, self.id))

    def __repr__(self):
        return f"Null(ν{self.id})"

    def sort_key(self):
        return (9, self.id, "")


def term_sort_key(term: Term):
    if isinstance(term, Constant):
        return (0,) + term.sort_key()
    if isinstance(term, Null):
        return (1, term.id, 0, "")
    raise TypeError(f"no order defined for {term!r}")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expression:
    __slots__ = ()

    def variables(self) -> Iterator[str]:
        return iter(())


@dataclass(frozen=True, slots=True)
class TermExpr(Expression):
    term: Term

    def variables(self):
        if isinstance(self.term, Variable):
            yield self.term.name


@dataclass(frozen=True, slots=True)
class BinOp(Expression):
    op: str  # + - * / ^ < <= > >= == != and or
    left: Expression
    right: Expression

    def variables(self):
        yield from self.left.variables()
        yield from self.right.variables()


@dataclass(frozen=True, slots=True)
class UnaryOp(Expression):
    op: str  # - not
    operand: Expression

    def variables(self):
        yield from self.operand.variables()


@dataclass(frozen=True, slots=True)
class FuncCall(Expression):
    namespace: str  # e.g. "math" in math:sqrt(X)
    name: str
    args: tuple[Expression, ...]

    def variables(self):
        for a in self.args:
            yield from a.variables()


COMPARISON_OPS = {"<", "<=", ">", ">=", "==", "!="}
AGGREGATE_OPS = {"msum", "mcount", "mprod", "min", "max"}


@dataclass(frozen=True, slots=True)
class AggregateCall:
    op: str  # msum | mcount | mprod | min | max
    argument: Expression

    def variables(self):
        yield from self.argument.variables()


# ---------------------------------------------------------------------------
# Atoms, rules, annotations, programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SourceSpan:
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple  # Term in body atoms; Term or Expression in head atoms

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[str]:
        for a in self.args:
            if isinstance(a, Variable):
                yield a.name
            elif isinstance(a, Expression):
                yield from a.variables()

    def is_ground(self) -> bool:
        return all(isinstance(a, (Constant, Null)) for a in self.args)


# Ordered rule-body items beyond the positive atoms. Source order matters:
# an item may only use variables bound by the positive atoms or by earlier
# assignments, and items written after an aggregate assignment see the
# updated aggregate value.
@dataclass(frozen=True, slots=True)
class Condition:
    expr: Expression

    def variables(self):
        yield from self.expr.variables()


@dataclass(frozen=True, slots=True)
class Assignment:
    variable: str
    expr: Union[Expression, AggregateCall]

    def variables(self):
        yield from self.expr.variables()


@dataclass(frozen=True, slots=True)
class Negation:
    atom: Atom

    def variables(self):
        yield from self.atom.variables()


BodyItem = Union[Condition, Assignment, Negation]


@dataclass(frozen=True, eq=False, slots=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]  # positive atoms
    items: tuple[BodyItem, ...] = ()  # conditions/assignments/negations, in order
    weight: Optional[float] = None  # soft-rule probability; None means hard
    span: Optional[SourceSpan] = None

    def __eq__(self, other):
        return (
            isinstance(other, Rule)
            and self.head == other.head
            and self.body == other.body
            and self.items == other.items
            and self.weight == other.weight
        )

    def __hash__(self):
        return hash((self.head, self.body, self.items, self.weight))

    @property
    def negated(self) -> tuple[Atom, ...]:
        return tuple(i.atom for i in self.items if isinstance(i, Negation))

    @property
    def conditions(self) -> tuple[Expression, ...]:
        return tuple(i.expr for i in self.items if isinstance(i, Condition))

    @property
    def assignments(self) -> tuple[Assignment, ...]:
        return tuple(i for i in self.items if isinstance(i, Assignment))

    @property
    def aggregate(self) -> Optional[Assignment]:
        for i in self.items:
            if isinstance(i, Assignment) and isinstance(i.expr, AggregateCall):
                return i
        return None

    def body_variables(self) -> set[str]:
        out: set[str] = set()
        for atom in self.body:
            out.update(atom.variables())
        return out

    def assigned_variables(self) -> set[str]:
        return {i.variable for i in self.items if isinstance(i, Assignment)}

    @property
    def existential_vars(self) -> frozenset[str]:
        """Head variables bound neither in the positive body nor by assignment."""
        bound = self.body_variables() | self.assigned_variables()
        return frozenset(v for v in self.head.variables() if v not in bound)


@dataclass(frozen=True, eq=False, slots=True)
class Annotation:
    kind: str  # input | output | bind | mapping | post | library | qbind
    args: tuple  # constant payloads (str/int/float/bool)
    span: Optional[SourceSpan] = None

    def __eq__(self, other):
        return (
            isinstance(other, Annotation)
            and self.kind == other.kind
            and self.args == other.args
        )

    def __hash__(self):
        return hash((self.kind, self.args))


@dataclass(frozen=True, eq=False, slots=True)
class FactStatement:
    atom: Atom
    span: Optional[SourceSpan] = None

    def __eq__(self, other):
        return isinstance(other, FactStatement) and self.atom == other.atom

    def __hash__(self):
        return hash(self.atom)


Statement = Union[Rule, FactStatement, Annotation]


@dataclass
class Program:
    """A parsed program: rules, inline facts, annotations, source spans."""

    statements: list[Statement] = field(default_factory=list)
    arities: dict[str, int] = field(default_factory=dict)

    @property
    def rules(self) -> list[Rule]:
        return [s for s in self.statements if isinstance(s, Rule)]

    @property
    def facts(self) -> list[FactStatement]:
        return [s for s in self.statements if isinstance(s, FactStatement)]

    @property
    def annotations(self) -> list[Annotation]:
        return [s for s in self.statements if isinstance(s, Annotation)]

    def annotations_of(self, kind: str) -> list[Annotation]:
        return [a for a in self.annotations if a.kind == kind]

    @property
    def source_map(self) -> dict[int, SourceSpan]:
        return {
            i: s.span
            for i, s in enumerate(self.statements)
            if getattr(s, "span", None) is not None
        }

    def rule_index(self, rule: Rule) -> int:
        """1-based position of a rule among the program's rules."""
        for i, r in enumerate(self.rules, start=1):
            if r is rule:
                return i
        raise ValueError("rule not in program")

    def __eq__(self, other):
        return isinstance(other, Program) and self.statements == other.statements

    def predicates(self) -> set[str]:
        preds = set(self.arities)
        return preds
