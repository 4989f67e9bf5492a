"""Recursive-descent parser producing the Program AST.

Grammar (normative):

    program    := statement*
    statement  := annotation | fact | rule
    rule       := [number "::"] atom ":-" bodyitem ("," bodyitem)* "."
    bodyitem   := atom | "not" atom | comparison | var "=" (expr | aggregate)
    aggregate  := ("msum"|"mcount"|"mprod"|"min"|"max") "(" expr ")"
    annotation := "@" name "(" literal ("," literal)* ")" "."
    fact       := atom "."            -- all arguments ground

Head variables that are bound neither in the positive body nor by an
assignment are existential. Body-atom arguments must be plain terms;
head-atom arguments may be expressions. `X = e` binds X when X is unbound
and otherwise acts as an equality condition.
"""

from __future__ import annotations

from typing import Optional

from . import lexer as lx
from .ast import (
    AGGREGATE_OPS,
    AggregateCall,
    Annotation,
    Assignment,
    Atom,
    BinOp,
    BodyItem,
    Condition,
    Constant,
    Expression,
    FactStatement,
    FuncCall,
    Negation,
    Program,
    Rule,
    SourceSpan,
    TermExpr,
    UnaryOp,
    Variable,
)
from .errors import ArityError, ParseError
from .lexer import Token

_ANNOTATION_KINDS = {"input", "output", "bind", "mapping", "post", "library", "qbind"}

_COMPARE_TOKENS = {
    lx.LT: "<",
    lx.LE: "<=",
    lx.GT: ">",
    lx.GE: ">=",
    lx.EQ: "==",
    lx.NEQ: "!=",
}


class _Parser:
    def __init__(self, text: str):
        self.tokens = lx.tokenize(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        j = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != lx.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"unexpected {tok.text!r}" if tok.text else "unexpected end of input",
                tok.span,
                expected={what or kind},
            )
        return self.next()

    def error(self, message: str, expected=None) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.span, expected=expected)

    # -- program -----------------------------------------------------------

    def parse_program(self) -> Program:
        program = Program()
        while self.peek().kind != lx.EOF:
            program.statements.append(self.parse_statement())
        _check_arities(program)
        return program

    def parse_statement(self):
        tok = self.peek()
        if tok.kind == lx.AT:
            return self.parse_annotation()

        weight = None
        if tok.kind == lx.NUMBER and self.peek(1).kind == lx.WEIGHT_SEP:
            self.next()
            self.next()
            weight = float(tok.value)
            if not 0.0 <= weight <= 1.0:
                raise ParseError(f"rule weight {tok.text} outside [0, 1]", tok.span)

        head = self.parse_atom(allow_expressions=True)
        nxt = self.peek()
        if nxt.kind == lx.DOT:
            end = self.next()
            if weight is not None:
                raise ParseError("a weight prefix is only allowed on rules", tok.span)
            if not head.is_ground():
                raise ParseError(
                    f"fact {head.predicate}/{head.arity} has non-ground arguments",
                    _span(tok, end),
                )
            return FactStatement(head, span=_span(tok, end))
        if nxt.kind != lx.IMPLIES:
            raise self.error(f"unexpected {nxt.text!r} after atom", expected={".", ":-"})
        self.next()

        body: list[Atom] = []
        items: list[BodyItem] = []
        while True:
            self.parse_body_item(body, items)
            if self.peek().kind == lx.COMMA:
                self.next()
                continue
            end = self.expect(lx.DOT, ".")
            break

        rule = Rule(head, tuple(body), tuple(items), weight=weight, span=_span(tok, end))
        aggs = [i for i in rule.items if isinstance(i, Assignment) and isinstance(i.expr, AggregateCall)]
        if len(aggs) > 1:
            raise ParseError("at most one aggregate assignment per rule", rule.span)
        if not body:
            raise ParseError("rule body needs at least one atom", rule.span)
        return rule

    # -- rule bodies ---------------------------------------------------------

    def parse_body_item(self, body: list[Atom], items: list[BodyItem]):
        tok = self.peek()
        if tok.kind == lx.KW_NOT:
            self.next()
            items.append(Negation(self.parse_atom(allow_expressions=False)))
            return
        if tok.kind == lx.IDENT:
            after = self.peek(1).kind
            if after == lx.LPAREN:
                body.append(self.parse_atom(allow_expressions=False))
                return
            if after == lx.ASSIGN:
                self.next()
                self.next()
                items.append(Assignment(tok.value, self.parse_assignment_rhs()))
                return
        expr = self.parse_expression()
        if not _is_condition(expr):
            raise ParseError("expected an atom, a comparison, or an assignment", tok.span)
        items.append(Condition(expr))

    def parse_assignment_rhs(self):
        tok = self.peek()
        if (
            tok.kind == lx.IDENT
            and tok.value in AGGREGATE_OPS
            and self.peek(1).kind == lx.LPAREN
        ):
            self.next()
            self.next()
            arg = self.parse_expression()
            self.expect(lx.RPAREN, ")")
            return AggregateCall(tok.value, arg)
        return self.parse_expression()

    # -- atoms ---------------------------------------------------------------

    def parse_atom(self, allow_expressions: bool) -> Atom:
        name = self.expect(lx.IDENT, "predicate name")
        self.expect(lx.LPAREN, "(")
        args: list = []
        if self.peek().kind != lx.RPAREN:
            while True:
                args.append(self.parse_atom_arg(allow_expressions))
                if self.peek().kind == lx.COMMA:
                    self.next()
                    continue
                break
        self.expect(lx.RPAREN, ")")
        return Atom(name.value, tuple(args))

    def parse_atom_arg(self, allow_expressions: bool):
        tok = self.peek()
        expr = self.parse_expression()
        if isinstance(expr, TermExpr):
            return expr.term
        if not allow_expressions:
            raise ParseError(
                "body-atom arguments must be constants or variables", tok.span
            )
        return expr

    # -- expressions ----------------------------------------------------------
    # Precedence, low to high: or, and, not, comparison, + -, * /, unary -, ^.

    def parse_expression(self) -> Expression:
        return self.parse_or()

    def parse_or(self) -> Expression:
        left = self.parse_and()
        while self.peek().kind == lx.KW_OR:
            self.next()
            left = BinOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expression:
        left = self.parse_not()
        while self.peek().kind == lx.KW_AND:
            self.next()
            left = BinOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expression:
        if self.peek().kind == lx.KW_NOT:
            self.next()
            return UnaryOp("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expression:
        left = self.parse_additive()
        kind = self.peek().kind
        if kind in _COMPARE_TOKENS:
            self.next()
            # Non-associative: a < b < c is a syntax error.
            return BinOp(_COMPARE_TOKENS[kind], left, self.parse_additive())
        return left

    def parse_additive(self) -> Expression:
        left = self.parse_multiplicative()
        while self.peek().kind in (lx.PLUS, lx.MINUS):
            op = "+" if self.next().kind == lx.PLUS else "-"
            left = BinOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> Expression:
        left = self.parse_unary()
        while self.peek().kind in (lx.STAR, lx.SLASH):
            op = "*" if self.next().kind == lx.STAR else "/"
            left = BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expression:
        if self.peek().kind == lx.MINUS:
            self.next()
            operand = self.parse_unary()
            folded = _fold_negation(operand)
            return folded if folded is not None else UnaryOp("-", operand)
        return self.parse_power()

    def parse_power(self) -> Expression:
        base = self.parse_primary()
        if self.peek().kind == lx.CARET:
            self.next()
            return BinOp("^", base, self.parse_unary())  # right-associative
        return base

    def parse_primary(self) -> Expression:
        tok = self.peek()
        if tok.kind == lx.NUMBER:
            self.next()
            return TermExpr(Constant(tok.value))
        if tok.kind == lx.STRING:
            self.next()
            return TermExpr(Constant(tok.value))
        if tok.kind == lx.BOOLEAN:
            self.next()
            return TermExpr(Constant(tok.value))
        if tok.kind == lx.LBRACKET:
            return TermExpr(Constant(self.parse_set_literal()))
        if tok.kind == lx.LPAREN:
            self.next()
            expr = self.parse_expression()
            self.expect(lx.RPAREN, ")")
            return expr
        if tok.kind == lx.IDENT:
            if self.peek(1).kind == lx.COLON and self.peek(2).kind == lx.IDENT:
                return self.parse_function_call()
            self.next()
            return TermExpr(Variable(tok.value))
        raise self.error(
            f"unexpected {tok.text!r}" if tok.text else "unexpected end of input",
            expected={"constant", "variable", "("},
        )

    def parse_function_call(self) -> FuncCall:
        ns = self.next()
        self.next()  # colon
        name = self.next()
        self.expect(lx.LPAREN, "(")
        args: list[Expression] = []
        if self.peek().kind != lx.RPAREN:
            while True:
                args.append(self.parse_expression())
                if self.peek().kind == lx.COMMA:
                    self.next()
                    continue
                break
        self.expect(lx.RPAREN, ")")
        return FuncCall(ns.value, name.value, tuple(args))

    def parse_set_literal(self) -> frozenset:
        self.expect(lx.LBRACKET, "[")
        members = []
        if self.peek().kind != lx.RBRACKET:
            while True:
                members.append(Constant(self.parse_literal_value()))
                if self.peek().kind == lx.COMMA:
                    self.next()
                    continue
                break
        self.expect(lx.RBRACKET, "]")
        return frozenset(members)

    def parse_literal_value(self):
        tok = self.peek()
        if tok.kind == lx.MINUS and self.peek(1).kind == lx.NUMBER:
            self.next()
            num = self.next()
            return -num.value
        if tok.kind in (lx.NUMBER, lx.STRING, lx.BOOLEAN):
            self.next()
            return tok.value
        raise self.error("expected a literal", expected={"number", "string", "boolean"})

    # -- annotations ----------------------------------------------------------

    def parse_annotation(self) -> Annotation:
        at = self.expect(lx.AT, "@")
        name = self.expect(lx.IDENT, "annotation name")
        if name.value not in _ANNOTATION_KINDS:
            raise ParseError(f"unknown annotation @{name.value}", name.span)
        self.expect(lx.LPAREN, "(")
        args = []
        if self.peek().kind != lx.RPAREN:
            while True:
                args.append(self.parse_literal_value())
                if self.peek().kind == lx.COMMA:
                    self.next()
                    continue
                break
        self.expect(lx.RPAREN, ")")
        end = self.expect(lx.DOT, ".")
        ann = Annotation(name.value, tuple(args), span=_span(at, end))
        _check_annotation(ann)
        return ann


def _fold_negation(expr: Expression) -> Optional[Expression]:
    """Fold -<number literal> into a negative constant."""
    if isinstance(expr, TermExpr) and isinstance(expr.term, Constant):
        v = expr.term.value
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return TermExpr(Constant(-v))
    return None


def _is_condition(expr: Expression) -> bool:
    if isinstance(expr, BinOp):
        return expr.op in ("<", "<=", ">", ">=", "==", "!=", "and", "or")
    if isinstance(expr, UnaryOp):
        return expr.op == "not"
    return isinstance(expr, FuncCall)


_ANNOTATION_SHAPES = {
    # kind: (min args, max args, checker description)
    "input": (1, 1),
    "output": (1, 1),
    "bind": (2, 5),
    "mapping": (4, 4),
    "post": (2, 2),
    "library": (2, 2),
    "qbind": (2, 8),  # stored verbatim; evaluation rejects the target later
}


def _check_annotation(ann: Annotation):
    lo, hi = _ANNOTATION_SHAPES[ann.kind]
    if not lo <= len(ann.args) <= hi:
        raise ParseError(
            f"@{ann.kind} takes {lo}" + (f"..{hi}" if hi != lo else "") + " arguments",
            ann.span,
        )
    if ann.kind in ("input", "output", "bind", "mapping", "post", "library"):
        if not isinstance(ann.args[0], str):
            raise ParseError(f"@{ann.kind} first argument must be a string", ann.span)
    if ann.kind == "mapping":
        _, column, position, typ = ann.args
        if not isinstance(column, str) or isinstance(position, bool) or not isinstance(position, int) or not isinstance(typ, str):
            raise ParseError(
                '@mapping arguments are ("pred", "column", position, "type")', ann.span
            )


def _check_arities(program: Program):
    """Arity is fixed per predicate across the whole program."""

    def check(predicate: str, arity: int, span):
        seen = program.arities.get(predicate)
        if seen is None:
            program.arities[predicate] = arity
        elif seen != arity:
            raise ArityError(
                f"predicate {predicate} used with arity {arity} but previously {seen}",
                span,
            )

    for stmt in program.statements:
        if isinstance(stmt, FactStatement):
            check(stmt.atom.predicate, stmt.atom.arity, stmt.span)
        elif isinstance(stmt, Rule):
            check(stmt.head.predicate, stmt.head.arity, stmt.span)
            for atom in stmt.body:
                check(atom.predicate, atom.arity, stmt.span)
            for atom in stmt.negated:
                check(atom.predicate, atom.arity, stmt.span)


def _span(start: Token, end: Token) -> SourceSpan:
    return SourceSpan(start.line, start.column, end.line, end.column + len(end.text))


def parse_program(text: str) -> Program:
    """Parse source text into a Program. Raises ParseError on bad input."""
    return _Parser(text).parse_program()


def parse_fact_literal(text: str) -> Atom:
    """Parse a single ground atom such as `controls("A","C")`."""
    p = _Parser(text.strip().rstrip("."))
    atom = p.parse_atom(allow_expressions=False)
    if p.peek().kind != lx.EOF:
        raise ParseError("trailing input after fact literal", p.peek().span)
    if not atom.is_ground():
        raise ParseError("fact literal must be ground", None)
    return atom
