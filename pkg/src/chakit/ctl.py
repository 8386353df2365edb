"""CTL parsing, printing and model checking over finite transition systems.

Temporal operators may carry step bounds (`AG<=20 !M`). Bounds count
*time*: each Kripke edge has weight 1 (one sampling step / one untimed
transition) or 0 (instantaneous move inside a sampling round). The
verified core is {EX, EU, EG}; everything else is derived by duality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import DeadEndError, FormulaSyntaxError, UnknownAtomError
from .therapy import FiniteMemoryTherapy, MemorylessTherapy
from .untimed import Cha, successors


# ---------------------------------------------------------------------------
# formulas

@dataclass(frozen=True)
class Formula:
    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Or(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class EX(Formula):
    sub: Formula


@dataclass(frozen=True)
class AX(Formula):
    sub: Formula


@dataclass(frozen=True)
class EF(Formula):
    sub: Formula
    bound: Optional[int] = None


@dataclass(frozen=True)
class AF(Formula):
    sub: Formula
    bound: Optional[int] = None


@dataclass(frozen=True)
class EG(Formula):
    sub: Formula
    bound: Optional[int] = None


@dataclass(frozen=True)
class AG(Formula):
    sub: Formula
    bound: Optional[int] = None


@dataclass(frozen=True)
class EU(Formula):
    lhs: Formula
    rhs: Formula
    bound: Optional[int] = None


@dataclass(frozen=True)
class AU(Formula):
    lhs: Formula
    rhs: Formula
    bound: Optional[int] = None


_UNARY_TEMPORAL = {"EX": EX, "AX": AX, "EF": EF, "AF": AF, "EG": EG, "AG": AG}

_TOKEN = re.compile(r"\s*(<=|->|\(|\)|\[|\]|!|&|\||[A-Za-z_][A-Za-z0-9_]*|\d+)")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            want = expected or "a token"
            raise FormulaSyntaxError(f"expected {want!r}, found {tok!r}", self.pos())
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implies()
        if self.peek() is not None:
            raise FormulaSyntaxError(f"trailing input {self.peek()!r}", self.pos())
        return f

    def implies(self) -> Formula:
        lhs = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(lhs, self.implies())
        return lhs

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def bound(self) -> Optional[int]:
        if self.peek() == "<=":
            self.take()
            tok = self.take()
            if not tok.isdigit():
                raise FormulaSyntaxError("bound must be a natural number", self.pos())
            return int(tok)
        return None

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("formula ended unexpectedly", self.pos())
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok in _UNARY_TEMPORAL:
            self.take()
            cls = _UNARY_TEMPORAL[tok]
            if tok in ("EX", "AX"):
                return cls(self.unary())
            k = self.bound()
            return cls(self.unary(), k)
        if tok in ("E", "A"):
            self.take()
            self.take("[")
            lhs = self.implies()
            self.take("U")
            k = self.bound()
            rhs = self.implies()
            self.take("]")
            return (EU if tok == "E" else AU)(lhs, rhs, k)
        if tok == "(":
            self.take()
            f = self.implies()
            self.take(")")
            return f
        if tok == "true":
            self.take()
            return TrueF()
        if tok == "false":
            self.take()
            return FalseF()
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            self.take()
            return Atom(tok)
        raise FormulaSyntaxError(f"unexpected token {tok!r}", self.pos())


def parse_ctl(text: str) -> Formula:
    """Parse formula text; raises FormulaSyntaxError with a position."""
    return _Parser(text).parse()


def _prec(f: Formula) -> int:
    if isinstance(f, (Atom, TrueF, FalseF, EU, AU)):
        return 5
    if isinstance(f, (Not, EX, AX, EF, AF, EG, AG)):
        return 4
    if isinstance(f, And):
        return 3
    if isinstance(f, Or):
        return 2
    return 1  # Implies


def _wrap(f: Formula, parent_prec: int) -> str:
    text = format_formula(f)
    return f"({text})" if _prec(f) < parent_prec else text


def format_formula(f: Formula) -> str:
    """Canonical text form; parse_ctl(format_formula(f)) == f."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Not):
        return "!" + _wrap(f.sub, 5)
    if isinstance(f, And):
        return f"{_wrap(f.lhs, 3)} & {_wrap(f.rhs, 4)}"
    if isinstance(f, Or):
        return f"{_wrap(f.lhs, 2)} | {_wrap(f.rhs, 3)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.lhs, 2)} -> {_wrap(f.rhs, 1)}"
    if isinstance(f, (EX, AX)):
        op = type(f).__name__
        return f"{op} {_wrap(f.sub, 5)}"
    if isinstance(f, (EF, AF, EG, AG)):
        op = type(f).__name__
        k = f"<={f.bound}" if f.bound is not None else ""
        return f"{op}{k} {_wrap(f.sub, 5)}"
    if isinstance(f, (EU, AU)):
        q = "E" if isinstance(f, EU) else "A"
        k = f"<={f.bound}" if f.bound is not None else ""
        return f"{q}[{format_formula(f.lhs)} U{k} {format_formula(f.rhs)}]"
    raise TypeError(f"not a formula: {f!r}")


def atoms_of(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset({f.name})
    out = frozenset()
    for name in ("sub", "lhs", "rhs"):
        child = getattr(f, name, None)
        if isinstance(child, Formula):
            out |= atoms_of(child)
    return out


# ---------------------------------------------------------------------------
# Kripke structures

class Kripke:
    """Finite total transition system with 0/1 time weights per edge."""

    def __init__(self, keys: Sequence, labels: Sequence, edges: Sequence,
                 weights: Optional[Sequence] = None, initial: int = 0,
                 extra_atoms: Sequence = ()):
        self.keys = tuple(keys)
        self.labels = tuple(frozenset(l) for l in labels)
        self.edges = [tuple(row) for row in edges]
        if weights is None:
            weights = [tuple(1 for _ in row) for row in self.edges]
        self.weights = [tuple(row) for row in weights]
        self.initial = initial
        universe = set(extra_atoms)
        for l in self.labels:
            universe |= l
        self.atom_universe = frozenset(universe)
        for v, row in enumerate(self.edges):
            if not row:
                raise DeadEndError(f"node {self.keys[v]!r} has no successor")
        self._cache = {}

    def __len__(self):
        return len(self.keys)

    # CSR helpers -----------------------------------------------------------
    def _csr(self, which: str):
        if which in self._cache:
            return self._cache[which]
        n = len(self.keys)
        if which in ("fwd", "fwd0", "fwd1"):
            keep = {"fwd": (0, 1), "fwd0": (0,), "fwd1": (1,)}[which]
            rows = [[m for m, w in zip(self.edges[v], self.weights[v]) if w in keep]
                    for v in range(n)]
        else:  # rev, rev0
            keep = {"rev": (0, 1), "rev0": (0,)}[which]
            rows = [[] for _ in range(n)]
            for v in range(n):
                for m, w in zip(self.edges[v], self.weights[v]):
                    if w in keep:
                        rows[m].append(v)
        indptr = np.zeros(n + 1, dtype=np.int64)
        for v in range(n):
            indptr[v + 1] = indptr[v] + len(rows[v])
        indices = np.fromiter((m for row in rows for m in row), dtype=np.int32,
                              count=int(indptr[-1]))
        self._cache[which] = (indptr, indices)
        return self._cache[which]

    def label_mask(self, atom: str) -> np.ndarray:
        if atom not in self.atom_universe:
            raise UnknownAtomError(f"unknown atom {atom!r}")
        return np.fromiter((atom in l for l in self.labels), dtype=np.uint8,
                           count=len(self.labels))


@dataclass(frozen=True)
class CheckResult:
    formula: Formula
    verdict: bool
    table: tuple  # (node key, bool) pairs in node order

    def holds_at(self, key) -> bool:
        return dict(self.table)[key]


def _ones(n):
    return np.ones(n, dtype=np.uint8)


def _zeros(n):
    return np.zeros(n, dtype=np.uint8)


class _Labeller:
    def __init__(self, k: Kripke):
        self.k = k
        self.memo = {}

    def sat(self, f: Formula) -> np.ndarray:
        if f in self.memo:
            return self.memo[f]
        self.memo[f] = out = self._compute(f)
        return out

    # core fixpoints --------------------------------------------------------
    def _ex(self, mask):
        indptr, indices = self.k._csr("fwd")
        return kernels.ex_step(indptr, indices, mask)

    def _eu(self, f_mask, g_mask):
        indptr, indices = self.k._csr("rev")
        return kernels.eu_fixpoint(indptr, indices, f_mask, g_mask)

    def _eg(self, f_mask):
        fi, fx = self.k._csr("fwd")
        ri, rx = self.k._csr("rev")
        return kernels.eg_fixpoint(fi, fx, ri, rx, f_mask, _zeros(len(self.k)))

    # bounded layers: 0-weight edges are instantaneous, 1-weight edges spend
    # one unit of the budget
    def _eu_bounded(self, f_mask, g_mask, k):
        r0i, r0x = self.k._csr("rev0")
        f1i, f1x = self.k._csr("fwd1")
        layer = kernels.eu_fixpoint(r0i, r0x, f_mask, g_mask)
        for _ in range(k):
            seed = g_mask | (f_mask & kernels.ex_step(f1i, f1x, layer))
            layer = kernels.eu_fixpoint(r0i, r0x, f_mask, seed)
        return layer

    def _eg_bounded(self, f_mask, k):
        f0i, f0x = self.k._csr("fwd0")
        r0i, r0x = self.k._csr("rev0")
        f1i, f1x = self.k._csr("fwd1")
        layer = _ones(len(self.k))
        for _ in range(k + 1):
            escape = kernels.ex_step(f1i, f1x, layer)
            layer = kernels.eg_fixpoint(f0i, f0x, r0i, r0x, f_mask, escape)
        return layer

    def _compute(self, f: Formula) -> np.ndarray:
        n = len(self.k)
        if isinstance(f, Atom):
            return self.k.label_mask(f.name)
        if isinstance(f, TrueF):
            return _ones(n)
        if isinstance(f, FalseF):
            return _zeros(n)
        if isinstance(f, Not):
            return (1 - self.sat(f.sub)).astype(np.uint8)
        if isinstance(f, And):
            return self.sat(f.lhs) & self.sat(f.rhs)
        if isinstance(f, Or):
            return self.sat(f.lhs) | self.sat(f.rhs)
        if isinstance(f, Implies):
            return ((1 - self.sat(f.lhs)) | self.sat(f.rhs)).astype(np.uint8)
        if isinstance(f, EX):
            return self._ex(self.sat(f.sub))
        if isinstance(f, AX):
            return (1 - self._ex(1 - self.sat(f.sub))).astype(np.uint8)
        if isinstance(f, EF):
            return self.sat(EU(TrueF(), f.sub, f.bound))
        if isinstance(f, AG):
            return (1 - self.sat(EF(Not(f.sub), f.bound))).astype(np.uint8)
        if isinstance(f, AF):
            return (1 - self.sat(EG(Not(f.sub), f.bound))).astype(np.uint8)
        if isinstance(f, EG):
            sub = self.sat(f.sub)
            return self._eg(sub) if f.bound is None else self._eg_bounded(sub, f.bound)
        if isinstance(f, EU):
            lhs, rhs = self.sat(f.lhs), self.sat(f.rhs)
            return (self._eu(lhs, rhs) if f.bound is None
                    else self._eu_bounded(lhs, rhs, f.bound))
        if isinstance(f, AU):
            not_g = Not(f.rhs)
            bad = EU(not_g, And(Not(f.lhs), not_g), f.bound)
            return (1 - (self.sat(bad) | self.sat(EG(not_g, f.bound)))).astype(np.uint8)
        raise TypeError(f"not a formula: {f!r}")


def model_check(k: Kripke, f: Formula) -> CheckResult:
    """Label every node with the formula; verdict is at the initial node."""
    sat = _Labeller(k).sat(f)
    table = tuple((key, bool(sat[i])) for i, key in enumerate(k.keys))
    return CheckResult(f, bool(sat[k.initial]), table)


# ---------------------------------------------------------------------------
# closing an untimed model under a therapy

def close_system(cha: Cha, therapy) -> Kripke:
    """Kripke structure whose paths are exactly the therapy's executions.

    Memoryless therapies close over the states themselves; bounded-memory
    therapies over history suffixes (product construction).
    """
    if isinstance(therapy, MemorylessTherapy):
        window = 1
    elif isinstance(therapy, FiniteMemoryTherapy):
        window = therapy.window
    else:
        raise DeadEndError(
            f"cannot close the system under a {type(therapy).__name__}")

    start = (cha.initial,)
    nodes = {start: 0}
    order = [start]
    edges = []
    i = 0
    while i < len(order):
        node = order[i]
        succ = successors(cha, node[-1], therapy.cocktail_for(list(node)))
        if not succ:
            raise DeadEndError(f"no move at {node[-1]!r} under the therapy")
        row = []
        for v in succ:
            nxt = (node + (v,))[-window:]
            if nxt not in nodes:
                nodes[nxt] = len(order)
                order.append(nxt)
            row.append(nodes[nxt])
        edges.append(row)
        i += 1
    keys = tuple(n if len(n) > 1 else n[0] for n in order)
    labels = [cha.labels[n[-1]] for n in order]
    return Kripke(keys, labels, edges, None, 0, extra_atoms=cha.label_universe())
