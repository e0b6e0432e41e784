"""Fuzzy first-order language, Lukasiewicz connectives, and grounded-theory
satisfiability with analytic subgradients.

Quantifiers aggregate with the harmonic mean (for-all) and the maximum
(exists). When a quantifier's instantiation product exceeds the budget, a
uniform sample of tuples without replacement is drawn; the sample is fixed
for the lifetime of one ground plan, so repeated evaluations of the same
plan are deterministic and gradient checks see a fixed function.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .numerics import make_rng

HMEAN_EPS = 1e-12


# ---------------------------------------------------------------------------
# Formula AST


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple  # constant ids or variable names


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class ForAll:
    variables: tuple
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    variables: tuple
    body: "Formula"


Formula = Atom | Not | And | Or | Implies | ForAll | Exists


@dataclass
class KnowledgeBase:
    signatures: dict  # predicate name -> arity
    formulas: list = field(default_factory=list)


@dataclass
class GroundedTheory:
    """A knowledge base plus the partial grounding of constants and predicates."""

    kb: KnowledgeBase
    constants: dict    # record id -> feature vector (np.ndarray)
    predicates: dict   # predicate name -> model

    def learnable_predicates(self) -> dict:
        return {name: m for name, m in self.predicates.items() if m.learnable_params()}


# ---------------------------------------------------------------------------
# KB text parser
#
# Syntax, one statement per line ('#' starts a comment):
#   pred partOf/2
#   Cat(b1)
#   forall x,y: partOf(x,y) -> ~partOf(y,x)
# Operators by loosening precedence: ~, &, |, -> (right associative).
# Identifiers bound by an enclosing quantifier are variables; all other
# identifiers in argument position are constants.


class KbSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"\s*(->|[(),:~&|]|[A-Za-z_][A-Za-z0-9_]*|\S)")


class _Parser:
    def __init__(self, text: str, line_no: int, signatures: dict):
        self.line_no = line_no
        self.signatures = signatures
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                break
            self.tokens.append((m.group(1), m.start(1) + 1))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def col(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else (self.tokens[-1][1] if self.tokens else 1)

    def take(self, expected=None):
        if self.i >= len(self.tokens):
            raise KbSyntaxError(f"unexpected end of line, expected {expected or 'a token'}", self.line_no, self.col())
        tok, col = self.tokens[self.i]
        if expected is not None and tok != expected:
            raise KbSyntaxError(f"expected {expected!r}, found {tok!r}", self.line_no, col)
        self.i += 1
        return tok, col

    def parse(self) -> Formula:
        f = self.formula(frozenset())
        if self.i < len(self.tokens):
            raise KbSyntaxError(f"trailing input {self.peek()!r}", self.line_no, self.col())
        return f

    def formula(self, bound) -> Formula:
        if self.peek() in ("forall", "exists"):
            kind, _ = self.take()
            variables = [self.ident("variable name")]
            while self.peek() == ",":
                self.take(",")
                variables.append(self.ident("variable name"))
            self.take(":")
            body = self.formula(bound | set(variables))
            cls = ForAll if kind == "forall" else Exists
            return cls(tuple(variables), body)
        return self.implies(bound)

    def implies(self, bound) -> Formula:
        left = self.disj(bound)
        if self.peek() == "->":
            self.take("->")
            return Implies(left, self.implies(bound))
        return left

    def disj(self, bound) -> Formula:
        f = self.conj(bound)
        while self.peek() == "|":
            self.take("|")
            f = Or(f, self.conj(bound))
        return f

    def conj(self, bound) -> Formula:
        f = self.unary(bound)
        while self.peek() == "&":
            self.take("&")
            f = And(f, self.unary(bound))
        return f

    def unary(self, bound) -> Formula:
        if self.peek() == "~":
            self.take("~")
            return Not(self.unary(bound))
        if self.peek() == "(":
            self.take("(")
            f = self.formula(bound)
            self.take(")")
            return f
        return self.atom(bound)

    def ident(self, what):
        tok, col = self.take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise KbSyntaxError(f"expected {what}, found {tok!r}", self.line_no, col)
        return tok

    def atom(self, bound) -> Atom:
        col = self.col()
        name = self.ident("predicate name")
        if name not in self.signatures:
            raise KbSyntaxError(f"unknown predicate {name!r}", self.line_no, col)
        self.take("(")
        args = [self.ident("term")]
        while self.peek() == ",":
            self.take(",")
            args.append(self.ident("term"))
        self.take(")")
        arity = self.signatures[name]
        if len(args) != arity:
            raise KbSyntaxError(f"predicate {name!r} has arity {arity}, got {len(args)} arguments", self.line_no, col)
        return Atom(name, tuple(args))


_DECL_RE = re.compile(r"^\s*pred\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*$")


def parse_kb(text: str) -> KnowledgeBase:
    """Parse declarations and formulas; errors carry line and column."""
    signatures: dict = {}
    pending: list[tuple[int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        decl = _DECL_RE.match(line)
        if decl:
            name, arity = decl.group(1), int(decl.group(2))
            if arity < 1:
                raise KbSyntaxError("arity must be >= 1", line_no, 1)
            signatures[name] = arity
        else:
            pending.append((line_no, line))
    formulas = [_Parser(line, line_no, signatures).parse() for line_no, line in pending]
    return KnowledgeBase(signatures=signatures, formulas=formulas)


# ---------------------------------------------------------------------------
# Lukasiewicz connectives


def _check_range(*values):
    for a in values:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"truth value {a} outside [0,1]")


def luk_not(a: float) -> float:
    _check_range(a)
    return 1.0 - a


def luk_and(a: float, b: float) -> float:
    _check_range(a, b)
    return max(0.0, a + b - 1.0)


def luk_or(a: float, b: float) -> float:
    _check_range(a, b)
    return min(1.0, a + b)


def luk_implies(a: float, b: float) -> float:
    _check_range(a, b)
    return min(1.0, 1.0 - a + b)


def eval_connectives(op: str, a: float, b: float | None = None) -> float:
    if op == "not":
        return luk_not(a)
    if b is None:
        raise ValueError(f"binary connective {op!r} needs two arguments")
    return {"and": luk_and, "or": luk_or, "implies": luk_implies}[op](a, b)


def hmean(values: np.ndarray) -> float:
    """Harmonic mean with epsilon-stabilized reciprocals."""
    v = np.asarray(values, dtype=np.float64)
    return float(len(v) / np.sum(1.0 / (v + HMEAN_EPS)))


# ---------------------------------------------------------------------------
# Ground plans: formulas expanded over their (possibly sampled) instantiations
# into explicit trees whose leaves are predicate calls. One plan fixes the
# instantiation sample; evaluation and backprop reuse it.


class _G:
    """Ground expression node.

    For "vhmean"/"vmax" nodes (vectorized quantifiers) children holds a
    single body template whose atom leaves index template slots, and
    slot_atoms maps (instantiation, slot) to global atom indices. Template
    nodes carry per-instantiation value arrays in varr.
    """

    __slots__ = ("kind", "children", "atom_index", "value", "slot_atoms", "varr")

    def __init__(self, kind, children=(), atom_index=None, slot_atoms=None):
        self.kind = kind          # atom|not|and|or|implies|hmean|max|vhmean|vmax
        self.children = children
        self.atom_index = atom_index
        self.value = 0.0
        self.slot_atoms = slot_atoms
        self.varr = None


def _has_quantifier(f: Formula) -> bool:
    if isinstance(f, (ForAll, Exists)):
        return True
    if isinstance(f, Not):
        return _has_quantifier(f.body)
    if isinstance(f, (And, Or, Implies)):
        return _has_quantifier(f.left) or _has_quantifier(f.right)
    return False


class GroundPlan:
    def __init__(self, gt: GroundedTheory, budget: int, rng: np.random.Generator | None):
        if not gt.kb.formulas:
            raise ValueError("cannot evaluate satisfiability of an empty knowledge base")
        self.gt = gt
        self.budget = budget
        rng = rng if rng is not None else make_rng(0)
        self._domain = sorted(gt.constants)
        self._atom_index: dict[tuple, int] = {}
        self._atoms: list[tuple] = []  # (pred, args)
        self.roots = [self._ground(f, {}, rng) for f in gt.kb.formulas]
        # batch inputs per predicate, built once
        self._per_pred: dict[str, dict] = {}
        for pred, group in self._group_atoms().items():
            model = self._model(pred)
            entry = {"indices": np.array([i for i, _ in group])}
            if model.symbolic:
                entry["values"] = np.array([model.truth_of(args) for _, args in group])
            else:
                entry["x"] = np.stack([
                    np.concatenate([gt.constants[a] for a in args]) for _, args in group
                ])
                if hasattr(model, "hidden_batch"):
                    # frozen-encoder models: hidden features never change
                    entry["hidden"] = model.hidden_batch(entry["x"])
            self._per_pred[pred] = entry

    def _model(self, pred: str):
        try:
            return self.gt.predicates[pred]
        except KeyError:
            raise KeyError(f"predicate {pred!r} has no grounding") from None

    def _group_atoms(self) -> dict:
        groups: dict[str, list] = {}
        for i, (pred, args) in enumerate(self._atoms):
            groups.setdefault(pred, []).append((i, args))
        return groups

    def _atom_node(self, pred: str, args: tuple) -> _G:
        for a in args:
            if a not in self.gt.constants:
                raise KeyError(f"constant {a!r} has no grounding vector")
        key = (pred, args)
        idx = self._atom_index.get(key)
        if idx is None:
            idx = len(self._atoms)
            self._atom_index[key] = idx
            self._atoms.append(key)
        return _G("atom", atom_index=idx)

    def _ground(self, f: Formula, bindings: dict, rng) -> _G:
        if isinstance(f, Atom):
            args = []
            for a in f.args:
                if a in bindings:
                    args.append(bindings[a])
                else:
                    args.append(a)
            return self._atom_node(f.pred, tuple(args))
        if isinstance(f, Not):
            return _G("not", (self._ground(f.body, bindings, rng),))
        if isinstance(f, (And, Or, Implies)):
            kind = {And: "and", Or: "or", Implies: "implies"}[type(f)]
            return _G(kind, (self._ground(f.left, bindings, rng), self._ground(f.right, bindings, rng)))
        if isinstance(f, (ForAll, Exists)):
            tuples = self._instantiations(len(f.variables), rng)
            if not _has_quantifier(f.body):
                return self._ground_vectorized(f, tuples, bindings)
            children = []
            for combo in tuples:
                inner = dict(bindings)
                inner.update(zip(f.variables, combo))
                children.append(self._ground(f.body, inner, rng))
            return _G("hmean" if isinstance(f, ForAll) else "max", tuple(children))
        raise TypeError(f"unknown formula node {type(f).__name__}")

    def _ground_vectorized(self, f, tuples, bindings) -> _G:
        """Quantifier over a flat body: one template plus an atom-index matrix."""
        slots: list[Atom] = []

        def template(g: Formula) -> _G:
            if isinstance(g, Atom):
                node = _G("atom", atom_index=len(slots))
                slots.append(g)
                return node
            if isinstance(g, Not):
                return _G("not", (template(g.body),))
            kind = {And: "and", Or: "or", Implies: "implies"}[type(g)]
            return _G(kind, (template(g.left), template(g.right)))

        body = template(f.body)
        slot_atoms = np.empty((len(tuples), len(slots)), dtype=np.int64)
        for i, combo in enumerate(tuples):
            env = dict(bindings)
            env.update(zip(f.variables, combo))
            for j, atom in enumerate(slots):
                args = tuple(env.get(a, a) for a in atom.args)
                slot_atoms[i, j] = self._atom_node(atom.pred, args).atom_index
        kind = "vhmean" if isinstance(f, ForAll) else "vmax"
        return _G(kind, (body,), slot_atoms=slot_atoms)

    def _instantiations(self, n_vars: int, rng) -> list:
        dom = self._domain
        if not dom:
            raise ValueError("quantified formula over an empty constant domain")
        total = len(dom) ** n_vars
        if total <= self.budget:
            return list(itertools.product(dom, repeat=n_vars))
        picks = rng.choice(total, size=self.budget, replace=False)
        picks.sort()
        out = []
        for flat in picks:
            combo = []
            for _ in range(n_vars):
                flat, r = divmod(flat, len(dom))
                combo.append(dom[r])
            out.append(tuple(combo))
        return out

    # -- evaluation --------------------------------------------------------

    def _atom_values(self) -> np.ndarray:
        values = np.empty(len(self._atoms))
        for pred, entry in self._per_pred.items():
            model = self._model(pred)
            if model.symbolic:
                values[entry["indices"]] = entry["values"]
            elif "hidden" in entry:
                from .predicates import sigmoid

                values[entry["indices"]] = sigmoid(entry["hidden"] @ model.beta)
            else:
                values[entry["indices"]] = model.forward_batch(entry["x"])
        return values

    @staticmethod
    def _eval_template(node: _G, slot_values: np.ndarray) -> np.ndarray:
        if node.kind == "atom":
            arr = slot_values[:, node.atom_index]
        else:
            parts = [GroundPlan._eval_template(c, slot_values) for c in node.children]
            if node.kind == "not":
                arr = 1.0 - parts[0]
            elif node.kind == "and":
                arr = np.maximum(0.0, parts[0] + parts[1] - 1.0)
            elif node.kind == "or":
                arr = np.minimum(1.0, parts[0] + parts[1])
            elif node.kind == "implies":
                arr = np.minimum(1.0, 1.0 - parts[0] + parts[1])
            else:
                raise ValueError(node.kind)
        node.varr = arr
        return arr

    def _eval_node(self, node: _G, atom_values: np.ndarray) -> float:
        if node.kind == "atom":
            node.value = float(atom_values[node.atom_index])
            return node.value
        if node.kind in ("vhmean", "vmax"):
            inst = self._eval_template(node.children[0], atom_values[node.slot_atoms])
            node.varr = inst
            node.value = hmean(inst) if node.kind == "vhmean" else float(inst.max())
            return node.value
        vals = [self._eval_node(c, atom_values) for c in node.children]
        if node.kind == "not":
            v = 1.0 - vals[0]
        elif node.kind == "and":
            v = max(0.0, vals[0] + vals[1] - 1.0)
        elif node.kind == "or":
            v = min(1.0, vals[0] + vals[1])
        elif node.kind == "implies":
            v = min(1.0, 1.0 - vals[0] + vals[1])
        elif node.kind == "hmean":
            v = hmean(vals)
        elif node.kind == "max":
            v = max(vals)
        else:
            raise ValueError(node.kind)
        node.value = v
        return v

    def formula_values(self) -> np.ndarray:
        atom_values = self._atom_values()
        return np.array([self._eval_node(r, atom_values) for r in self.roots])

    def satisfiability(self) -> float:
        return hmean(self.formula_values())

    # -- backprop ----------------------------------------------------------

    def _backprop_node(self, node: _G, upstream: float, atom_grads: np.ndarray) -> None:
        if upstream == 0.0:
            return
        if node.kind == "atom":
            atom_grads[node.atom_index] += upstream
            return
        if node.kind in ("vhmean", "vmax"):
            inst = node.varr
            if node.kind == "vhmean":
                h, n = node.value, len(inst)
                d = upstream * (h * h / n) / ((inst + HMEAN_EPS) ** 2)
            else:
                d = np.zeros(len(inst))
                d[int(np.argmax(inst))] = upstream
            slot_grads = np.zeros_like(node.slot_atoms, dtype=np.float64)
            self._backprop_template(node.children[0], d, slot_grads)
            np.add.at(atom_grads, node.slot_atoms.ravel(), slot_grads.ravel())
            return
        c = node.children
        if node.kind == "not":
            self._backprop_node(c[0], -upstream, atom_grads)
        elif node.kind == "and":
            # right-hand derivative of max(0, x) at the kink is 1
            if c[0].value + c[1].value - 1.0 >= 0.0:
                self._backprop_node(c[0], upstream, atom_grads)
                self._backprop_node(c[1], upstream, atom_grads)
        elif node.kind == "or":
            # right-hand derivative of min(1, x) at the kink is 0
            if c[0].value + c[1].value < 1.0:
                self._backprop_node(c[0], upstream, atom_grads)
                self._backprop_node(c[1], upstream, atom_grads)
        elif node.kind == "implies":
            if 1.0 - c[0].value + c[1].value < 1.0:
                self._backprop_node(c[0], -upstream, atom_grads)
                self._backprop_node(c[1], upstream, atom_grads)
        elif node.kind == "hmean":
            h = node.value
            n = len(c)
            for child in c:
                d = (h * h / n) / ((child.value + HMEAN_EPS) ** 2)
                self._backprop_node(child, upstream * d, atom_grads)
        elif node.kind == "max":
            best = max(range(len(c)), key=lambda i: c[i].value)
            self._backprop_node(c[best], upstream, atom_grads)
        else:
            raise ValueError(node.kind)

    @staticmethod
    def _backprop_template(node: _G, upstream: np.ndarray, slot_grads: np.ndarray) -> None:
        if node.kind == "atom":
            slot_grads[:, node.atom_index] += upstream
            return
        c = node.children
        if node.kind == "not":
            GroundPlan._backprop_template(c[0], -upstream, slot_grads)
        elif node.kind == "and":
            mask = (c[0].varr + c[1].varr - 1.0) >= 0.0
            GroundPlan._backprop_template(c[0], upstream * mask, slot_grads)
            GroundPlan._backprop_template(c[1], upstream * mask, slot_grads)
        elif node.kind == "or":
            mask = (c[0].varr + c[1].varr) < 1.0
            GroundPlan._backprop_template(c[0], upstream * mask, slot_grads)
            GroundPlan._backprop_template(c[1], upstream * mask, slot_grads)
        elif node.kind == "implies":
            mask = (1.0 - c[0].varr + c[1].varr) < 1.0
            GroundPlan._backprop_template(c[0], -upstream * mask, slot_grads)
            GroundPlan._backprop_template(c[1], upstream * mask, slot_grads)
        else:
            raise ValueError(node.kind)

    def satisfiability_with_grads(self) -> tuple[float, dict]:
        """Returns (sat, {pred: {param: grad}}) for learnable predicates."""
        values = self.formula_values()
        sat = hmean(values)
        atom_grads = np.zeros(len(self._atoms))
        n = len(self.roots)
        for root, v in zip(self.roots, values):
            d = (sat * sat / n) / ((v + HMEAN_EPS) ** 2)
            self._backprop_node(root, d, atom_grads)
        grads: dict = {}
        for pred, entry in self._per_pred.items():
            model = self._model(pred)
            if model.symbolic:
                continue
            upstream = atom_grads[entry["indices"]]
            grads[pred] = model.gradient_batch(entry["x"], upstream, hidden=entry.get("hidden"))
        return sat, grads

    def refresh_hidden_cache(self) -> None:
        """Recompute cached hidden features (after an encoder swap)."""
        for pred, entry in self._per_pred.items():
            model = self._model(pred)
            if "hidden" in entry:
                entry["hidden"] = model.hidden_batch(entry["x"])


# ---------------------------------------------------------------------------
# Public operations


def eval_formula(gt: GroundedTheory, f: Formula, bindings: dict | None = None,
                 budget: int = 10_000, rng: np.random.Generator | None = None) -> float:
    """Evaluate one formula under the grounding; free variables via bindings."""
    grounded = _substitute(f, bindings) if bindings else f
    sub = GroundedTheory(kb=KnowledgeBase(signatures=gt.kb.signatures, formulas=[grounded]),
                         constants=gt.constants, predicates=gt.predicates)
    return float(GroundPlan(sub, budget, rng).formula_values()[0])


def _substitute(f: Formula, bindings: dict) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(bindings.get(a, a) for a in f.args))
    if isinstance(f, Not):
        return Not(_substitute(f.body, bindings))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_substitute(f.left, bindings), _substitute(f.right, bindings))
    if isinstance(f, (ForAll, Exists)):
        inner = {k: v for k, v in bindings.items() if k not in f.variables}
        return type(f)(f.variables, _substitute(f.body, inner))
    raise TypeError(type(f).__name__)


def satisfiability(gt: GroundedTheory, instantiation_budget: int = 10_000,
                   rng: np.random.Generator | None = None) -> float:
    """Aggregate truth of all KB formulas under the grounding."""
    return GroundPlan(gt, instantiation_budget, rng).satisfiability()


def satisfiability_gradient(gt: GroundedTheory, instantiation_budget: int = 10_000,
                            rng: np.random.Generator | None = None) -> tuple[float, dict]:
    """Satisfiability plus parameter gradients, on one fixed instantiation sample."""
    return GroundPlan(gt, instantiation_budget, rng).satisfiability_with_grads()
