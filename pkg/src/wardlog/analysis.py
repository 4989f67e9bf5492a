"""Static analysis: affected positions, variable danger classification,
wardedness, negation/aggregate stratification, and program lints.

Position indices are 0-based. A position is *affected* when a labelled
null can reach it: either an existential head variable occurs there, or a
body variable that occurs only at affected positions is propagated to it.
A body variable is *harmful* when any of its positive-body occurrences
sits at an affected position (so it may be unified with a null), and
*dangerous* when it is harmful and also propagated to the head. Every
rule with dangerous variables needs a ward: one positive body atom
containing all of them and sharing only harmless variables with the rest
of the body.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .ast import (
    AggregateCall,
    Annotation,
    Assignment,
    Atom,
    Condition,
    Negation,
    Program,
    Rule,
    SourceSpan,
    Variable,
)
from .errors import CycleError

Position = tuple[str, int]
PositionSet = frozenset[Position]


def _body_occurrences(rule: Rule) -> dict[str, list[Position]]:
    occ: dict[str, list[Position]] = {}
    for atom in rule.body:
        for i, arg in enumerate(atom.args):
            if isinstance(arg, Variable):
                occ.setdefault(arg.name, []).append((atom.predicate, i))
    return occ


def compute_affected_positions(program: Program) -> PositionSet:
    """Least fixpoint of the null-propagation closure over all rules."""
    affected: set[Position] = set()
    for rule in program.rules:
        ex = rule.existential_vars
        for i, arg in enumerate(rule.head.args):
            if isinstance(arg, Variable) and arg.name in ex:
                affected.add((rule.head.predicate, i))

    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            occ = _body_occurrences(rule)
            for var, positions in occ.items():
                if not all(p in affected for p in positions):
                    continue
                for i, arg in enumerate(rule.head.args):
                    if isinstance(arg, Variable) and arg.name == var:
                        pos = (rule.head.predicate, i)
                        if pos not in affected:
                            affected.add(pos)
                            changed = True
    return frozenset(affected)


class Classification(enum.Enum):
    HARMLESS = "harmless"
    HARMFUL = "harmful"
    DANGEROUS = "dangerous"


@dataclass
class VariableClassification:
    """Per rule, each variable's danger level. Dangerous implies harmful."""

    per_rule: list[dict[str, Classification]]

    def for_rule(self, index: int) -> dict[str, Classification]:
        return self.per_rule[index]


def classify_variables(program: Program, affected: PositionSet) -> VariableClassification:
    per_rule = []
    for rule in program.rules:
        occ = _body_occurrences(rule)
        head_vars = set(rule.head.variables())
        classes: dict[str, Classification] = {}
        for var, positions in occ.items():
            if any(p in affected for p in positions):
                if var in head_vars:
                    classes[var] = Classification.DANGEROUS
                else:
                    classes[var] = Classification.HARMFUL
            else:
                classes[var] = Classification.HARMLESS
        # Variables bound by assignment or used only in conditions /
        # negations carry computed or constant values, never nulls.
        for item in rule.items:
            for var in item.variables():
                classes.setdefault(var, Classification.HARMLESS)
        for item in rule.items:
            if isinstance(item, Assignment):
                classes.setdefault(item.variable, Classification.HARMLESS)
        per_rule.append(classes)
    return VariableClassification(per_rule)


@dataclass
class RuleWard:
    rule_index: int  # 0-based position among program.rules
    dangerous: frozenset[str]
    ward: Optional[Atom] = None
    violated: Optional[str] = None  # "i" or "ii"
    offending: frozenset[str] = frozenset()
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.violated is None


@dataclass
class WardednessReport:
    warded: bool
    rules: list[RuleWard]

    def violations(self) -> list[RuleWard]:
        return [r for r in self.rules if not r.ok]


def check_wardedness(program: Program) -> WardednessReport:
    affected = compute_affected_positions(program)
    classes = classify_variables(program, affected)
    entries: list[RuleWard] = []
    for idx, rule in enumerate(program.rules):
        rule_classes = classes.for_rule(idx)
        dangerous = frozenset(
            v for v, c in rule_classes.items() if c is Classification.DANGEROUS
        )
        if not dangerous:
            entries.append(RuleWard(idx, dangerous, ward=None))
            continue
        candidates = [
            atom for atom in rule.body if dangerous <= set(atom.variables())
        ]
        if not candidates:
            entries.append(
                RuleWard(
                    idx,
                    dangerous,
                    violated="i",
                    offending=dangerous,
                    message=(
                        "dangerous variables "
                        + ", ".join(sorted(dangerous))
                        + " do not coexist in a single body atom"
                    ),
                )
            )
            continue
        chosen = None
        first_offending: frozenset[str] = frozenset()
        for atom in candidates:  # leftmost qualifying atom wins
            rest_vars: set[str] = set()
            for other in rule.body:
                if other is not atom:
                    rest_vars.update(other.variables())
            shared = set(atom.variables()) & rest_vars
            offending = frozenset(
                v
                for v in shared
                if rule_classes.get(v, Classification.HARMLESS)
                is not Classification.HARMLESS
            )
            if not offending:
                chosen = atom
                break
            if not first_offending:
                first_offending = offending
        if chosen is not None:
            entries.append(RuleWard(idx, dangerous, ward=chosen))
        else:
            entries.append(
                RuleWard(
                    idx,
                    dangerous,
                    violated="ii",
                    offending=first_offending,
                    message=(
                        "every candidate ward shares harmful variables ("
                        + ", ".join(sorted(first_offending))
                        + ") with the rest of the body"
                    ),
                )
            )
    return WardednessReport(all(e.ok for e in entries), entries)


# ---------------------------------------------------------------------------
# Dependency graph and stratification
# ---------------------------------------------------------------------------

def aggregate_defined(program: Program) -> set[str]:
    return {r.head.predicate for r in program.rules if r.aggregate is not None}


def dependency_graph(program: Program) -> nx.DiGraph:
    """Edges run body-predicate -> head-predicate ("feeds")."""
    g = nx.DiGraph()
    for pred in program.arities:
        g.add_node(pred)
    for rule in program.rules:
        head = rule.head.predicate
        for atom in rule.body:
            _add_edge(g, atom.predicate, head, negative=False)
        for atom in rule.negated:
            _add_edge(g, atom.predicate, head, negative=True)
    return g


def _add_edge(g: nx.DiGraph, src: str, dst: str, negative: bool):
    if g.has_edge(src, dst):
        g[src][dst]["negative"] = g[src][dst]["negative"] or negative
    else:
        g.add_edge(src, dst, negative=negative)


@dataclass
class Stratification:
    strata: list[frozenset[str]]
    stratum_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.stratum_of:
            self.stratum_of = {
                p: i for i, preds in enumerate(self.strata) for p in preds
            }

    def __len__(self):
        return len(self.strata)


def stratify(program: Program) -> Stratification:
    """Order predicates so negation and non-recursive consumption of
    aggregate-defined predicates always look strictly downward.

    Recursion through an aggregate within one component is allowed (the
    emitted values are monotone); everything else consuming an
    aggregate-defined predicate waits for its final values one stratum up.
    Raises CycleError when a negation cycle makes this impossible.
    """
    g = dependency_graph(program)
    agg = aggregate_defined(program)

    comp_of: dict[str, int] = {}
    components = list(nx.strongly_connected_components(g))
    for ci, members in enumerate(components):
        for m in members:
            comp_of[m] = ci

    for src, dst, attrs in g.edges(data=True):
        if attrs["negative"] and comp_of[src] == comp_of[dst]:
            path = nx.shortest_path(g, dst, src)
            raise CycleError("negation cycle", witness=path + [dst])

    cond = nx.DiGraph()
    cond.add_nodes_from(range(len(components)))
    for src, dst, attrs in g.edges(data=True):
        cs, cd = comp_of[src], comp_of[dst]
        if cs == cd:
            continue
        lift = attrs["negative"] or src in agg
        prev = cond.get_edge_data(cs, cd)
        if prev is None:
            cond.add_edge(cs, cd, lift=lift)
        else:
            prev["lift"] = prev["lift"] or lift

    level = {ci: 0 for ci in cond.nodes}
    for ci in nx.topological_sort(cond):
        for pred_comp in cond.predecessors(ci):
            need = level[pred_comp] + (1 if cond[pred_comp][ci]["lift"] else 0)
            level[ci] = max(level[ci], need)

    height = max(level.values(), default=0) + 1
    strata: list[set[str]] = [set() for _ in range(height)]
    for ci, members in enumerate(components):
        strata[level[ci]].update(members)
    return Stratification([frozenset(s) for s in strata])


# ---------------------------------------------------------------------------
# Lints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lint:
    code: str
    severity: str  # "error" | "warning"
    message: str
    span: Optional[SourceSpan] = None

    def render(self) -> str:
        where = str(self.span) if self.span else "-"
        return f"{self.severity.upper()} {self.code} {where} {self.message}"


def _producers(program: Program):
    by_rule = {r.head.predicate for r in program.rules}
    by_fact = {f.atom.predicate for f in program.facts}
    by_input = {a.args[0] for a in program.annotations_of("input")}
    return by_rule, by_fact, by_input


def lint(program: Program) -> list[Lint]:
    """Error patterns L1-L5.

    L1 (error): a condition, assignment, or negated atom uses a variable
        bound by no positive body atom or earlier assignment.
    L2 (error): a predicate is consumed positively but produced by no rule
        head, inline fact, or @input declaration.
    L3 (error): an @output predicate is never produced.
    L4 (warning): a produced predicate is never consumed and not @output.
    L5 (warning): a rule can never fire because a body predicate is
        transitively unproducible.
    """
    lints: list[Lint] = []
    by_rule, by_fact, by_input = _producers(program)
    produced = by_rule | by_fact | by_input

    consumed: dict[str, Rule] = {}
    for rule in program.rules:
        for atom in list(rule.body) + list(rule.negated):
            consumed.setdefault(atom.predicate, rule)

    # L1: unbound variables in non-atom body items.
    for rule in program.rules:
        bound = rule.body_variables()
        for item in rule.items:
            unbound = sorted(set(item.variables()) - bound)
            if unbound:
                if isinstance(item, Condition):
                    what = "condition"
                elif isinstance(item, Assignment):
                    what = "assignment"
                else:
                    what = "negated atom"
                lints.append(
                    Lint(
                        "L1",
                        "error",
                        f"{what} uses unbound variable{'s' if len(unbound) > 1 else ''} "
                        + ", ".join(unbound),
                        rule.span,
                    )
                )
            if isinstance(item, Assignment):
                bound = bound | {item.variable}

    # L2: consumed but never produced.
    for pred in sorted(set(consumed) - produced):
        rule = consumed[pred]
        only_negated = all(
            pred not in {a.predicate for a in r.body} for r in program.rules
        )
        if only_negated:
            continue  # negating an always-empty predicate is vacuous, not broken
        lints.append(
            Lint(
                "L2",
                "error",
                f"predicate {pred} is consumed but never produced "
                "(no rule head, inline fact, or @input binding)",
                rule.span,
            )
        )

    # L3: @output of something never produced.
    for ann in program.annotations_of("output"):
        pred = ann.args[0]
        if pred not in produced:
            lints.append(
                Lint("L3", "error", f"@output predicate {pred} is never produced", ann.span)
            )

    # L4: produced, never consumed, not @output.
    outputs = {a.args[0] for a in program.annotations_of("output")}
    for pred in sorted(produced - set(consumed) - outputs):
        span = None
        for rule in program.rules:
            if rule.head.predicate == pred:
                span = rule.span
                break
        if span is None:
            for f in program.facts:
                if f.atom.predicate == pred:
                    span = f.span
                    break
        if span is None:
            for ann in program.annotations_of("input"):
                if ann.args[0] == pred:
                    span = ann.span
                    break
        lints.append(
            Lint("L4", "warning", f"predicate {pred} is produced but never used", span)
        )

    # L5: rules that can never fire.
    producible = by_fact | by_input
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            head = rule.head.predicate
            if head not in producible and all(
                a.predicate in producible for a in rule.body
            ):
                producible.add(head)
                changed = True
    l2_preds = set(consumed) - produced
    for rule in program.rules:
        dead = [a.predicate for a in rule.body if a.predicate not in producible]
        if dead and not any(p in l2_preds for p in dead):
            lints.append(
                Lint(
                    "L5",
                    "warning",
                    f"rule for {rule.head.predicate} can never fire: "
                    + ", ".join(sorted(set(dead)))
                    + " cannot receive facts",
                    rule.span,
                )
            )

    lints.sort(key=lambda l: (l.span.line if l.span else 0, l.span.column if l.span else 0, l.code))
    return lints


def error_lints(lints: list[Lint]) -> list[Lint]:
    return [l for l in lints if l.severity == "error"]
